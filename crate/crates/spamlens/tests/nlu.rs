//! The HTTP tagger against a local single-purpose server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use spamlens::nlu::HttpNlu;
use spamlens_core::sentiment::SentimentScorer;
use spamlens_core::topics::ExternalTagger;

/// Serves `responses` in order, one connection each, and returns the
/// request bodies it saw.
fn serve(responses: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/analyze", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut request = vec![0u8; length];
            reader.read_exact(&mut request).unwrap();
            bodies.push(String::from_utf8(request).unwrap());
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
        bodies
    });
    (url, handle)
}

#[test]
fn categories_and_sentiment_are_parsed() {
    let body = r#"{"categories":[{"label":"/sports/hockey","score":0.91},{"label":"/news","score":0.2}],"sentiment":{"score":-0.4}}"#;
    let (url, server) = serve(vec![(200, body.into()), (200, r#"{"categories":[],"sentiment":{"score":3.5}}"#.into())]);
    let nlu = HttpNlu::new(url, Duration::from_secs(5));
    let analysis = nlu.analyze("what a \"goal\"").unwrap();
    assert_eq!(analysis.categories.len(), 2);
    assert_eq!(analysis.categories[0].label, "/sports/hockey");
    assert_eq!(analysis.categories[0].score, 0.91);
    assert_eq!(analysis.sentiment, Some(-0.4));
    // out-of-range sentiment is clamped
    assert_eq!(nlu.score("great").unwrap(), 1.0);
    let bodies = server.join().unwrap();
    let first: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(first, serde_json::json!({"text": "what a \"goal\""}));
}

#[test]
fn failures_become_tagger_errors() {
    let (url, server) = serve(vec![
        (500, "{}".into()),
        (200, "not json".into()),
        (200, r#"{"categories":[]}"#.into()),
    ]);
    let nlu = HttpNlu::new(url, Duration::from_secs(5));
    assert!(nlu.analyze("a").is_err());
    assert!(nlu.analyze("b").is_err());
    assert!(nlu.score("c").is_err(), "missing sentiment is an error for the scorer");
    server.join().unwrap();
}

#[test]
fn unreachable_service_is_an_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let nlu = HttpNlu::new(format!("http://127.0.0.1:{port}/"), Duration::from_millis(500));
    assert!(nlu.analyze("x").is_err());
}
