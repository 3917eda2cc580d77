use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatBackend, ChatRequest, GatewayError, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            api_key_env: "LLM_API_KEY".into(),
            max_in_flight: 4,
            max_retries: 5,
            backoff_base_ms: 500,
            timeout_secs: 120,
        }
    }
}

impl BackendConfig {
    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.max_retries,
            backoff_base: Duration::from_millis(self.backoff_base_ms),
        }
    }
}

/// Blocking chat-completions client. One `send` is one HTTP POST.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint_url: String,
    api_key: String,
}

impl HttpBackend {
    /// Reads the key from the configured environment variable.
    pub fn from_config(config: &BackendConfig) -> Result<Self, GatewayError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| GatewayError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::with_key(config, key))
    }

    pub fn with_key(config: &BackendConfig, api_key: impl Into<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build();
        Self {
            agent,
            endpoint_url: config.endpoint_url.clone(),
            api_key: api_key.into(),
        }
    }
}

pub(crate) fn request_body(request: &ChatRequest) -> Value {
    json!({
        "model": request.model_name,
        "messages": request.messages,
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
    })
}

pub(crate) fn parse_response(body: &str) -> Result<String, GatewayError> {
    let value: Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::Protocol(format!("response is not JSON: {e}")))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| GatewayError::Protocol("missing choices[0].message.content".into()))
}

fn retry_after(response: &ureq::Response) -> Option<Duration> {
    response
        .header("Retry-After")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|s| s.is_finite() && *s >= 0.0)
        .map(Duration::from_secs_f64)
}

impl ChatBackend for HttpBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let body = request_body(request).to_string();
        let result = self
            .agent
            .post(&self.endpoint_url)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .set("Content-Type", "application/json")
            .send_string(&body);
        match result {
            Ok(response) => {
                let text = response
                    .into_string()
                    .map_err(|e| GatewayError::Transport(e.to_string()))?;
                parse_response(&text)
            }
            Err(ureq::Error::Status(status, response)) => Err(match status {
                401 | 403 => GatewayError::Auth(format!("HTTP {status}")),
                429 => GatewayError::RateLimited {
                    retry_after: retry_after(&response),
                },
                500..=599 => GatewayError::Transport(format!("HTTP {status}")),
                _ => GatewayError::Protocol(format!(
                    "HTTP {status}: {}",
                    response.into_string().unwrap_or_default()
                )),
            }),
            Err(ureq::Error::Transport(t)) => Err(GatewayError::Transport(t.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ChatMessage;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves one canned response per connection and forwards each raw
    /// request (head + body) to the returned channel.
    fn serve(responses: Vec<String>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for response in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut head = String::new();
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                    head.push_str(&line);
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                tx.send(head + &String::from_utf8(body).unwrap()).unwrap();
                let mut stream = stream;
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        (url, rx)
    }

    fn http(status: &str, extra: &str, body: &str) -> String {
        format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\n{extra}Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
    }

    fn backend(url: String) -> HttpBackend {
        let config = BackendConfig {
            endpoint_url: url,
            timeout_secs: 5,
            ..BackendConfig::default()
        };
        HttpBackend::with_key(&config, "sk-test")
    }

    fn request() -> ChatRequest {
        ChatRequest::new(
            "gpt-test",
            vec![
                ChatMessage::system("Translate from German to English"),
                ChatMessage::user("Eine Eule ruft durch die Nacht."),
            ],
        )
        .with_temperature(0.0)
        .with_max_output_tokens(256)
    }

    #[test]
    fn posts_wire_format_and_reads_first_choice() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"An owl calls through the night."}},{"message":{"content":"other"}}]}"#;
        let (url, rx) = serve(vec![http("200 OK", "", body)]);
        let text = backend(url).send(&request()).unwrap();
        assert_eq!(text, "An owl calls through the night.");

        let raw = rx.recv().unwrap();
        assert!(raw.starts_with("POST /v1/chat/completions"));
        let lower = raw.to_ascii_lowercase();
        assert!(lower.contains("authorization: bearer sk-test"));
        assert!(lower.contains("content-type: application/json"));
        let json: Value = serde_json::from_str(&raw[raw.find("\r\n\r\n").unwrap() + 4..]).unwrap();
        assert_eq!(
            json,
            json!({
                "model": "gpt-test",
                "messages": [
                    {"role": "system", "content": "Translate from German to English"},
                    {"role": "user", "content": "Eine Eule ruft durch die Nacht."}
                ],
                "temperature": 0.0,
                "max_tokens": 256
            })
        );
    }

    #[test]
    fn maps_status_codes() {
        let (url, _rx) = serve(vec![
            http("401 Unauthorized", "", "{}"),
            http("429 Too Many Requests", "Retry-After: 2\r\n", "{}"),
            http("503 Service Unavailable", "", "{}"),
            http("200 OK", "", r#"{"choices":[]}"#),
        ]);
        let b = backend(url);
        assert!(matches!(b.send(&request()), Err(GatewayError::Auth(_))));
        assert_eq!(
            b.send(&request()),
            Err(GatewayError::RateLimited {
                retry_after: Some(Duration::from_secs(2))
            })
        );
        assert!(matches!(
            b.send(&request()),
            Err(GatewayError::Transport(_))
        ));
        assert!(matches!(b.send(&request()), Err(GatewayError::Protocol(_))));
    }

    #[test]
    fn connection_refused_is_transport() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        assert!(matches!(
            backend(url).send(&request()),
            Err(GatewayError::Transport(_))
        ));
    }

    #[test]
    fn missing_key_is_reported_without_network() {
        let config = BackendConfig {
            api_key_env: "CORPUS_FORGE_TEST_UNSET_KEY".into(),
            endpoint_url: "http://127.0.0.1:9/".into(),
            ..BackendConfig::default()
        };
        assert!(matches!(
            HttpBackend::from_config(&config),
            Err(GatewayError::MissingApiKey(v)) if v == "CORPUS_FORGE_TEST_UNSET_KEY"
        ));
    }

    #[test]
    fn malformed_body_is_protocol_error() {
        assert!(matches!(
            parse_response("not json"),
            Err(GatewayError::Protocol(_))
        ));
        assert!(matches!(
            parse_response(r#"{"choices":[{"message":{"content":7}}]}"#),
            Err(GatewayError::Protocol(_))
        ));
    }
}
