#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use corpus_forge::corpus::SplitSpec;
use corpus_forge::gateway::{
    ChatBackend, ChatRequest, Gateway, GatewayError, MockBackend, RetryPolicy,
};
use corpus_forge::hallucinator::{
    run_pipeline, GenerationPlan, HallucinateError, PipelineOutput, PromptSet, RequestSettings,
    RunInfo, RunLayout, StageContext,
};

/// Mock backend that counts calls.
pub struct Counting {
    inner: MockBackend,
    pub calls: AtomicUsize,
}

impl Counting {
    pub fn new(seed: u64) -> Arc<Self> {
        Arc::new(Counting {
            inner: MockBackend::new(seed, &PromptSet::default().mock_patterns()),
            calls: AtomicUsize::new(0),
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatBackend for Counting {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.send(request)
    }
}

pub fn small_plan() -> GenerationPlan {
    GenerationPlan {
        n_nouns: 5,
        n_verbs: 5,
        sentences_per_seed: 4,
        ..GenerationPlan::default()
    }
}

pub fn small_split() -> SplitSpec {
    SplitSpec {
        train_token_threshold: 40,
        valid_token_threshold: 10,
        test_token_threshold: None,
        rng_seed: 3,
    }
}

pub fn run_with(
    root: &Path,
    plan: &GenerationPlan,
    split: &SplitSpec,
    backend: Arc<dyn ChatBackend>,
) -> Result<PipelineOutput, HallucinateError> {
    let prompts = PromptSet::default();
    let gateway = Gateway::new(backend, RetryPolicy::default(), 4);
    let settings = RequestSettings::default();
    let ctx = StageContext {
        plan,
        prompts: &prompts,
        settings: &settings,
        gateway: &gateway,
    };
    let info = RunInfo {
        run_id: "fixture".into(),
        backend: "mock".into(),
        mock_seed: Some(42),
    };
    run_pipeline(&ctx, split, &RunLayout::new(root), &info)
}

pub fn mock_run(
    root: &Path,
    plan: &GenerationPlan,
    split: &SplitSpec,
    mock_seed: u64,
) -> PipelineOutput {
    run_with(root, plan, split, Counting::new(mock_seed)).expect("mock pipeline")
}

/// Relative path → contents of every file under `root`.
pub fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}
