use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread;

use volrisk::ingest::{load_price_series, ColumnMap, IngestError};

/// Serves `body` once with the given status line, on an ephemeral port.
fn serve_once(status: &'static str, body: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut buf = [0u8; 4096];
        let _ = stream.read(&mut buf);
        let resp = format!("HTTP/1.1 {status}\r\nContent-Type: text/csv\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len());
        stream.write_all(resp.as_bytes()).unwrap();
    });
    format!("http://{addr}/prices.csv")
}

#[test]
fn fetches_csv_over_http() {
    let url = serve_once("200 OK", "date,close\n2020-01-03,101\n2020-01-02,100\n2020-01-06,99.5\n");
    let s = load_price_series("WEB", &url, &ColumnMap::default()).unwrap();
    assert_eq!(s.closes(), vec![100.0, 101.0, 99.5]);
    assert_eq!(s.symbol(), "WEB");
}

#[test]
fn http_errors_are_reported() {
    let url = serve_once("404 Not Found", "missing");
    assert!(matches!(load_price_series("WEB", &url, &ColumnMap::default()), Err(IngestError::Fetch { .. })));
}
