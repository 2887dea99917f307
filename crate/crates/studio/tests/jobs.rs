use std::sync::Arc;
use std::time::Duration;

use guohua_core::corpus::TagDimension;
use guohua_core::ideation::{GenerationMode, GenerationRequest, GenerationResult, Poem, TagSet};
use guohua_studio::jobs::{GenerationJob, JobExecutor, JobQueue, JobStatus, RESTART_ERROR};

fn request(concept: &str) -> GenerationRequest {
    GenerationRequest::crafted(TagSet::from_pairs([(TagDimension::CulturalSymbol, concept)]).unwrap())
}

fn result(r: &GenerationRequest) -> GenerationResult {
    GenerationResult {
        mode: GenerationMode::Crafted,
        design_intention: r.tags.concepts().join(" "),
        images: (0..r.image_count).map(|i| format!("img{i}.svg")).collect(),
        poem: Poem::unavailable(),
        transcripts: vec![],
    }
}

fn slow(ms: u64) -> Arc<dyn JobExecutor> {
    Arc::new(move |r: &GenerationRequest| {
        std::thread::sleep(Duration::from_millis(ms));
        Ok(result(r))
    })
}

/// Never returns; stands in for a worker that is cut off by a crash.
fn stuck() -> Arc<dyn JobExecutor> {
    Arc::new(|_: &GenerationRequest| loop {
        std::thread::park();
    })
}

async fn wait_all(q: &JobQueue, ids: &[String]) -> Vec<GenerationJob> {
    let mut out = Vec::new();
    for id in ids {
        out.push(q.wait(id, Duration::from_secs(20)).await.unwrap());
    }
    out
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn ten_jobs_respect_the_worker_limit() {
    let q = JobQueue::start(None, 2, slow(60)).unwrap();
    let ids: Vec<String> = (0..10).map(|i| q.submit(request(&format!("c{i}"))).unwrap()).collect();
    let mut max_running = 0;
    while ids.iter().any(|id| !q.get(id).unwrap().status.is_terminal()) {
        max_running = max_running.max(q.running_count());
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
    let jobs = wait_all(&q, &ids).await;
    assert!(jobs.iter().all(|j| j.status == JobStatus::Done));
    assert!(jobs.iter().all(|j| j.result.as_ref().unwrap().images.len() == 3));
    assert!(q.peak_running() <= 2, "peak {}", q.peak_running());
    assert_eq!(q.peak_running(), 2);
    assert!(max_running <= 2);
}

#[tokio::test]
async fn failed_jobs_keep_their_error_text() {
    let q = JobQueue::start(None, 2, Arc::new(|_: &GenerationRequest| Err("image endpoint: 503 Service Unavailable".to_string()))).unwrap();
    let id = q.submit(request("deer")).unwrap();
    let job = q.wait(&id, Duration::from_secs(5)).await.unwrap();
    assert_eq!(job.status, JobStatus::Failed);
    assert_eq!(job.error.as_deref(), Some("image endpoint: 503 Service Unavailable"));
    assert!(job.finished_at.is_some());
}

#[test]
fn terminal_states_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("jobs.jsonl");

    // first life: one job finishes, one fails, one is cut off mid-run, two wait
    let rt = tokio::runtime::Runtime::new().unwrap();
    let (done, failed, cut, waiting) = rt.block_on(async {
        let ok = JobQueue::start(Some(log.clone()), 1, slow(1)).unwrap();
        let done = ok.submit(request("pine")).unwrap();
        assert_eq!(ok.wait(&done, Duration::from_secs(5)).await.unwrap().status, JobStatus::Done);
        drop(ok);

        let bad = JobQueue::start(Some(log.clone()), 1, Arc::new(|_: &GenerationRequest| Err("boom".to_string()))).unwrap();
        let failed = bad.submit(request("crane")).unwrap();
        assert_eq!(bad.wait(&failed, Duration::from_secs(5)).await.unwrap().status, JobStatus::Failed);
        drop(bad);

        let hang = JobQueue::start(Some(log.clone()), 1, stuck()).unwrap();
        let cut = hang.submit(request("deer")).unwrap();
        let waiting = vec![hang.submit(request("lotus")).unwrap(), hang.submit(request("plum")).unwrap()];
        while hang.get(&cut).unwrap().status != JobStatus::Running {
            tokio::time::sleep(Duration::from_millis(2)).await;
        }
        (done, failed, cut, waiting)
    });
    rt.shutdown_background();

    // second life
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async {
        let q = JobQueue::start(Some(log.clone()), 2, slow(1)).unwrap();
        let d = q.get(&done).unwrap();
        assert_eq!(d.status, JobStatus::Done);
        assert_eq!(d.result.unwrap().design_intention, "pine");
        let f = q.get(&failed).unwrap();
        assert_eq!((f.status, f.error.as_deref()), (JobStatus::Failed, Some("boom")));
        let c = q.get(&cut).unwrap();
        assert_eq!((c.status, c.error.as_deref()), (JobStatus::Failed, Some(RESTART_ERROR)));
        for j in wait_all(&q, &waiting).await {
            assert_eq!(j.status, JobStatus::Done);
        }
    });
    drop(rt);

    // third life sees the same terminal states
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async {
        let q = JobQueue::start(Some(log.clone()), 1, stuck()).unwrap();
        assert_eq!(q.get(&done).unwrap().status, JobStatus::Done);
        assert_eq!(q.get(&cut).unwrap().error.as_deref(), Some(RESTART_ERROR));
        for id in &waiting {
            assert_eq!(q.get(id).unwrap().status, JobStatus::Done);
        }
        assert_eq!(q.jobs().len(), 5);
        assert_eq!(q.running(), 0);
    });
    rt.shutdown_background();
}
