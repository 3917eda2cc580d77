//! Chat-completions gateway with retries and bounded batch concurrency.
//!
//! A [`Gateway`] wraps a single-attempt [`ChatBackend`] (HTTP or mock) and
//! adds the retry policy plus ordered fan-out for batches.

mod http;
mod mock;

pub use http::{BackendConfig, HttpBackend};
pub use mock::{MockBackend, MockPatterns, MockStage};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// A chat request. Roles need not alternate; consecutive assistant
/// messages are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    pub fn new(model_name: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        Self {
            messages,
            model_name: model_name.into(),
            temperature: 1.0,
            max_output_tokens: 4096,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_max_output_tokens(mut self, max: u32) -> Self {
        self.max_output_tokens = max;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest(
                "request has no messages".into(),
            ));
        }
        if let Some(i) = self.messages.iter().position(|m| m.content.is_empty()) {
            return Err(GatewayError::InvalidRequest(format!(
                "message {i} is empty"
            )));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} out of range",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Content of the first message with `role`.
    pub fn first(&self, role: Role) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == role)
            .map(|m| m.content.as_str())
    }

    pub fn last(&self, role: Role) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == role)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("api key variable {0} is not set")]
    MissingApiKey(String),
    #[error("mock backend cannot classify request: {0}")]
    UnclassifiableRequest(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            GatewayError::Transport(_) | GatewayError::RateLimited { .. }
        )
    }
}

/// One attempt at a chat completion.
pub trait ChatBackend: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// Adapts a closure into a backend.
pub struct FnBackend<F>(pub F);

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, GatewayError> + Send + Sync,
{
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        (self.0)(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_base: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 5,
            backoff_base: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based). Exponential in the base,
    /// raised to any server-advised delay, and always longer than `previous`.
    pub fn delay(
        &self,
        retry: u32,
        advised: Option<Duration>,
        previous: Option<Duration>,
    ) -> Duration {
        let factor = 1u32.checked_shl(retry.min(20)).unwrap_or(u32::MAX);
        let mut delay = self.backoff_base.saturating_mul(factor);
        if let Some(advised) = advised {
            delay = delay.max(advised);
        }
        if let Some(prev) = previous {
            if delay <= prev {
                delay = prev + self.backoff_base.max(Duration::from_millis(1));
            }
        }
        delay
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    policy: RetryPolicy,
    max_in_flight: usize,
    sleeper: Sleeper,
    attempts: AtomicUsize,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, policy: RetryPolicy, max_in_flight: usize) -> Self {
        Self {
            backend,
            policy,
            max_in_flight: max_in_flight.max(1),
            sleeper: Arc::new(std::thread::sleep),
            attempts: AtomicUsize::new(0),
        }
    }

    /// Replaces the function used to wait between retries.
    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Arc::new(sleeper);
        self
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight
    }

    /// Total backend attempts so far, retries included.
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::Relaxed)
    }

    /// Returns the assistant content of the first choice, retrying transient
    /// failures up to the policy's limit.
    pub fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        request.validate()?;
        let mut previous = None;
        let mut retry = 0;
        loop {
            self.attempts.fetch_add(1, Ordering::Relaxed);
            let err = match self.backend.send(request) {
                Ok(text) => return Ok(text),
                Err(err) => err,
            };
            if !err.is_retryable() || retry >= self.policy.max_retries {
                return Err(err);
            }
            let advised = match &err {
                GatewayError::RateLimited { retry_after } => *retry_after,
                _ => None,
            };
            let delay = self.policy.delay(retry, advised, previous);
            log::debug!(
                "attempt {} failed ({err}); retrying in {delay:?}",
                retry + 1
            );
            (self.sleeper)(delay);
            previous = Some(delay);
            retry += 1;
        }
    }

    /// Completes every request with at most `max_in_flight` outstanding.
    /// Results come back sorted by input index; failures stay per item.
    pub fn complete_batch(
        &self,
        requests: &[ChatRequest],
    ) -> Vec<(usize, Result<String, GatewayError>)> {
        let next = AtomicUsize::new(0);
        let results = Mutex::new(Vec::with_capacity(requests.len()));
        let workers = self.max_in_flight.min(requests.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let index = next.fetch_add(1, Ordering::Relaxed);
                    let Some(request) = requests.get(index) else {
                        break;
                    };
                    let result = self.complete(request);
                    results.lock().expect("results lock").push((index, result));
                });
            }
        });
        let mut results = results.into_inner().expect("results lock");
        results.sort_by_key(|(index, _)| *index);
        results
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn request(text: &str) -> ChatRequest {
        ChatRequest::new("m", vec![ChatMessage::user(text)])
    }

    fn recording_gateway(
        backend: impl ChatBackend + 'static,
        max_retries: u32,
    ) -> (Gateway, Arc<Mutex<Vec<Duration>>>) {
        let delays = Arc::new(Mutex::new(Vec::new()));
        let sink = delays.clone();
        let gateway = Gateway::new(
            Arc::new(backend),
            RetryPolicy {
                max_retries,
                backoff_base: Duration::from_millis(100),
            },
            2,
        )
        .with_sleeper(move |d| sink.lock().unwrap().push(d));
        (gateway, delays)
    }

    #[test]
    fn empty_request_rejected() {
        let (gw, _) = recording_gateway(FnBackend(|_: &ChatRequest| Ok("x".into())), 0);
        let req = ChatRequest::new("m", vec![]);
        assert!(matches!(
            gw.complete(&req),
            Err(GatewayError::InvalidRequest(_))
        ));
        assert_eq!(gw.attempts(), 0);
    }

    #[test]
    fn succeeds_after_transient_failures() {
        let calls = AtomicUsize::new(0);
        let backend = FnBackend(move |_: &ChatRequest| {
            if calls.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(GatewayError::Transport("reset".into()))
            } else {
                Ok("done".into())
            }
        });
        let (gw, delays) = recording_gateway(backend, 3);
        assert_eq!(gw.complete(&request("hi")).unwrap(), "done");
        assert_eq!(gw.attempts(), 3);
        assert_eq!(
            *delays.lock().unwrap(),
            vec![Duration::from_millis(100), Duration::from_millis(200)]
        );
    }

    #[test]
    fn retries_are_bounded_and_delays_increase() {
        let backend = FnBackend(|_: &ChatRequest| Err(GatewayError::Transport("down".into())));
        let (gw, delays) = recording_gateway(backend, 4);
        assert!(matches!(
            gw.complete(&request("hi")),
            Err(GatewayError::Transport(_))
        ));
        assert_eq!(gw.attempts(), 5);
        let delays = delays.lock().unwrap();
        assert_eq!(delays.len(), 4);
        assert!(delays.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn auth_errors_not_retried() {
        let backend = FnBackend(|_: &ChatRequest| Err(GatewayError::Auth("401".into())));
        let (gw, delays) = recording_gateway(backend, 5);
        assert!(matches!(
            gw.complete(&request("hi")),
            Err(GatewayError::Auth(_))
        ));
        assert_eq!(gw.attempts(), 1);
        assert!(delays.lock().unwrap().is_empty());
    }

    #[test]
    fn rate_limit_honours_advised_delay() {
        let calls = AtomicUsize::new(0);
        let backend =
            FnBackend(
                move |_: &ChatRequest| match calls.fetch_add(1, Ordering::SeqCst) {
                    0 => Err(GatewayError::RateLimited {
                        retry_after: Some(Duration::from_secs(3)),
                    }),
                    1 => Err(GatewayError::RateLimited { retry_after: None }),
                    _ => Ok("ok".into()),
                },
            );
        let (gw, delays) = recording_gateway(backend, 5);
        assert_eq!(gw.complete(&request("hi")).unwrap(), "ok");
        let delays = delays.lock().unwrap();
        assert_eq!(delays[0], Duration::from_secs(3));
        assert!(delays[1] > delays[0]);
    }

    #[test]
    fn batch_returns_every_index_with_bounded_concurrency() {
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let (c, p) = (current.clone(), peak.clone());
        let backend = FnBackend(move |req: &ChatRequest| {
            let now = c.fetch_add(1, Ordering::SeqCst) + 1;
            p.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(15));
            c.fetch_sub(1, Ordering::SeqCst);
            Ok(req.last(Role::User).unwrap().to_uppercase())
        });
        let gw = Gateway::new(Arc::new(backend), RetryPolicy::default(), 2);
        let reqs: Vec<_> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|t| request(t))
            .collect();
        let results = gw.complete_batch(&reqs);
        let indices: Vec<_> = results.iter().map(|(i, _)| *i).collect();
        assert_eq!(indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(results[3].1.as_deref(), Ok("D"));
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn batch_isolates_failures() {
        let backend = FnBackend(|req: &ChatRequest| {
            if req.last(Role::User) == Some("2") {
                Err(GatewayError::Auth("denied".into()))
            } else {
                Ok("fine".into())
            }
        });
        let gw = Gateway::new(Arc::new(backend), RetryPolicy::default(), 3);
        let reqs: Vec<_> = (0..5).map(|i| request(&i.to_string())).collect();
        let results = gw.complete_batch(&reqs);
        assert_eq!(results.len(), 5);
        for (i, r) in &results {
            assert_eq!(r.is_err(), *i == 2);
        }
    }

    #[test]
    fn batch_of_nothing() {
        let gw = Gateway::new(
            Arc::new(FnBackend(|_: &ChatRequest| Ok(String::new()))),
            RetryPolicy::default(),
            4,
        );
        assert!(gw.complete_batch(&[]).is_empty());
    }

    #[test]
    fn delay_schedule_is_strictly_increasing() {
        let policy = RetryPolicy {
            max_retries: 10,
            backoff_base: Duration::from_millis(50),
        };
        let mut prev = None;
        for retry in 0..10 {
            let advised = (retry == 2).then(|| Duration::from_secs(60));
            let d = policy.delay(retry, advised, prev);
            if let Some(p) = prev {
                assert!(d > p);
            }
            prev = Some(d);
        }
    }
}
