//! Generation job queue.
//!
//! Every status change is appended to a JSONL transition log and fsynced
//! before it becomes visible. On start the log is replayed: jobs that were
//! Running are marked Failed, jobs still Queued are queued again. A semaphore
//! caps how many jobs run at once.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use guohua_core::ideation::{GenerationRequest, GenerationResult};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, Semaphore};

pub const DEFAULT_WORKERS: usize = 2;
pub const RESTART_ERROR: &str = "interrupted by service restart";

#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("job log: {0}")]
    Log(String),
    #[error("illegal transition {from:?} -> {to:?} for job `{job}`")]
    Transition { job: String, from: JobStatus, to: JobStatus },
    #[error("queue is shut down")]
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }

    fn can_become(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Queued, JobStatus::Running)
                | (JobStatus::Running, JobStatus::Done)
                | (JobStatus::Running, JobStatus::Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationJob {
    pub job_id: String,
    pub request: GenerationRequest,
    pub status: JobStatus,
    pub result: Option<GenerationResult>,
    pub error: Option<String>,
    pub queued_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
}

/// One line of the transition log.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Transition {
    job_id: String,
    status: JobStatus,
    at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    request: Option<GenerationRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    result: Option<GenerationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Runs one generation request. Called on a blocking thread.
pub trait JobExecutor: Send + Sync + 'static {
    fn execute(&self, request: &GenerationRequest) -> Result<GenerationResult, String>;
}

impl<F> JobExecutor for F
where
    F: Fn(&GenerationRequest) -> Result<GenerationResult, String> + Send + Sync + 'static,
{
    fn execute(&self, request: &GenerationRequest) -> Result<GenerationResult, String> {
        self(request)
    }
}

#[derive(Debug, Default)]
struct State {
    jobs: HashMap<String, GenerationJob>,
    log: Option<File>,
}

struct Inner {
    state: Mutex<State>,
    permits: Arc<Semaphore>,
    running: AtomicUsize,
    peak: AtomicUsize,
    workers: usize,
    executor: Arc<dyn JobExecutor>,
    tx: mpsc::UnboundedSender<String>,
}

/// Cheap to clone; all clones share one queue.
#[derive(Clone)]
pub struct JobQueue {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for JobQueue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JobQueue")
            .field("workers", &self.inner.workers)
            .field("running", &self.running())
            .finish_non_exhaustive()
    }
}

fn apply(jobs: &mut HashMap<String, GenerationJob>, t: Transition) -> Result<(), JobError> {
    match (t.status, jobs.get_mut(&t.job_id)) {
        (JobStatus::Queued, None) => {
            let request = t.request.ok_or_else(|| JobError::Log(format!("job `{}` queued without request", t.job_id)))?;
            jobs.insert(
                t.job_id.clone(),
                GenerationJob {
                    job_id: t.job_id,
                    request,
                    status: JobStatus::Queued,
                    result: None,
                    error: None,
                    queued_at: t.at,
                    started_at: None,
                    finished_at: None,
                },
            );
            Ok(())
        }
        (to, Some(job)) => {
            if !job.status.can_become(to) {
                return Err(JobError::Transition { job: t.job_id, from: job.status, to });
            }
            job.status = to;
            match to {
                JobStatus::Running => job.started_at = Some(t.at),
                JobStatus::Done => {
                    job.finished_at = Some(t.at);
                    job.result = Some(t.result.ok_or_else(|| JobError::Log(format!("job `{}` done without result", job.job_id)))?);
                }
                JobStatus::Failed => {
                    job.finished_at = Some(t.at);
                    job.error = Some(t.error.unwrap_or_default());
                }
                JobStatus::Queued => unreachable!("queued is only a start state"),
            }
            Ok(())
        }
        (to, None) => Err(JobError::Log(format!("transition to {to:?} for unknown job `{}`", t.job_id))),
    }
}

/// Rebuilds job state from a log file. A torn final line is ignored.
fn replay(path: &Path) -> Result<(HashMap<String, GenerationJob>, Vec<String>), JobError> {
    let mut jobs = HashMap::new();
    let mut order = Vec::new();
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((jobs, order)),
        Err(e) => return Err(JobError::Log(format!("{}: {e}", path.display()))),
    };
    let lines: Vec<String> = BufReader::new(f)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| JobError::Log(format!("{}: {e}", path.display())))?;
    let last = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: Transition = match serde_json::from_str(&line) {
            Ok(t) => t,
            Err(e) if i + 1 == last => {
                tracing::warn!(error = %e, "ignoring torn last line of job log");
                continue;
            }
            Err(e) => return Err(JobError::Log(format!("{} line {}: {e}", path.display(), i + 1))),
        };
        if t.status == JobStatus::Queued {
            order.push(t.job_id.clone());
        }
        apply(&mut jobs, t)?;
    }
    Ok((jobs, order))
}

impl Inner {
    fn record(&self, t: Transition) -> Result<(), JobError> {
        let mut st = self.state.lock().expect("job state lock");
        let mut probe: HashMap<String, GenerationJob> =
            st.jobs.get(&t.job_id).map(|j| (j.job_id.clone(), j.clone())).into_iter().collect();
        apply(&mut probe, t.clone())?;
        if let Some(f) = st.log.as_mut() {
            let mut line = serde_json::to_string(&t).expect("transition serializes");
            line.push('\n');
            f.write_all(line.as_bytes())
                .and_then(|_| f.sync_data())
                .map_err(|e| JobError::Log(e.to_string()))?;
        }
        st.jobs.extend(probe);
        Ok(())
    }

    fn transition(&self, job_id: &str, status: JobStatus, result: Option<GenerationResult>, error: Option<String>) {
        let t = Transition { job_id: job_id.to_string(), status, at: Utc::now(), request: None, result, error };
        if let Err(e) = self.record(t) {
            tracing::error!(job = job_id, error = %e, "failed to record job transition");
        }
    }
}

impl JobQueue {
    /// Starts the queue. Must be called inside a tokio runtime.
    pub fn start(
        log_path: Option<PathBuf>,
        workers: usize,
        executor: Arc<dyn JobExecutor>,
    ) -> Result<JobQueue, JobError> {
        let workers = workers.max(1);
        let (jobs, order) = match &log_path {
            Some(p) => replay(p)?,
            None => (HashMap::new(), Vec::new()),
        };
        let log = match &log_path {
            Some(p) => {
                if let Some(parent) = p.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| JobError::Log(e.to_string()))?;
                }
                Some(
                    OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(p)
                        .map_err(|e| JobError::Log(format!("{}: {e}", p.display())))?,
                )
            }
            None => None,
        };
        let (tx, rx) = mpsc::unbounded_channel();
        let inner = Arc::new(Inner {
            state: Mutex::new(State { jobs, log }),
            permits: Arc::new(Semaphore::new(workers)),
            running: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            workers,
            executor,
            tx,
        });

        let mut requeue = Vec::new();
        for id in order {
            let status = inner.state.lock().expect("job state lock").jobs[&id].status;
            match status {
                JobStatus::Running => {
                    tracing::warn!(job = %id, "job was running at shutdown; marking failed");
                    inner.transition(&id, JobStatus::Failed, None, Some(RESTART_ERROR.into()));
                }
                JobStatus::Queued => requeue.push(id),
                _ => {}
            }
        }
        for id in requeue {
            let _ = inner.tx.send(id);
        }
        tokio::spawn(dispatch(Arc::downgrade(&inner), rx));
        Ok(JobQueue { inner })
    }

    pub fn workers(&self) -> usize {
        self.inner.workers
    }

    /// Validates, records and enqueues a request.
    pub fn submit(&self, request: GenerationRequest) -> Result<String, JobError> {
        request.validate().map_err(|e| JobError::Invalid(e.to_string()))?;
        let job_id = uuid::Uuid::new_v4().to_string();
        self.inner.record(Transition {
            job_id: job_id.clone(),
            status: JobStatus::Queued,
            at: Utc::now(),
            request: Some(request),
            result: None,
            error: None,
        })?;
        self.inner.tx.send(job_id.clone()).map_err(|_| JobError::Closed)?;
        Ok(job_id)
    }

    pub fn get(&self, job_id: &str) -> Option<GenerationJob> {
        self.inner.state.lock().expect("job state lock").jobs.get(job_id).cloned()
    }

    pub fn jobs(&self) -> Vec<GenerationJob> {
        let mut v: Vec<_> = self.inner.state.lock().expect("job state lock").jobs.values().cloned().collect();
        v.sort_by(|a, b| a.queued_at.cmp(&b.queued_at).then_with(|| a.job_id.cmp(&b.job_id)));
        v
    }

    /// Jobs whose status is Running right now.
    pub fn running_count(&self) -> usize {
        self.inner.state.lock().expect("job state lock").jobs.values().filter(|j| j.status == JobStatus::Running).count()
    }

    /// Executor calls in flight.
    pub fn running(&self) -> usize {
        self.inner.running.load(Ordering::SeqCst)
    }

    /// Highest value [`running`](Self::running) has reached.
    pub fn peak_running(&self) -> usize {
        self.inner.peak.load(Ordering::SeqCst)
    }

    /// Polls until the job is terminal or the timeout passes.
    pub async fn wait(&self, job_id: &str, timeout: std::time::Duration) -> Option<GenerationJob> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let job = self.get(job_id)?;
            if job.status.is_terminal() || tokio::time::Instant::now() >= deadline {
                return Some(job);
            }
            tokio::time::sleep(std::time::Duration::from_millis(5)).await;
        }
    }
}

async fn dispatch(inner: std::sync::Weak<Inner>, mut rx: mpsc::UnboundedReceiver<String>) {
    while let Some(job_id) = rx.recv().await {
        let Some(strong) = inner.upgrade() else { break };
        let Ok(permit) = strong.permits.clone().acquire_owned().await else { break };
        tokio::spawn(async move {
            let request = match strong.state.lock().expect("job state lock").jobs.get(&job_id) {
                Some(j) if j.status == JobStatus::Queued => j.request.clone(),
                _ => return,
            };
            strong.transition(&job_id, JobStatus::Running, None, None);
            let now = strong.running.fetch_add(1, Ordering::SeqCst) + 1;
            strong.peak.fetch_max(now, Ordering::SeqCst);

            let exec = strong.executor.clone();
            let outcome = tokio::task::spawn_blocking(move || exec.execute(&request))
                .await
                .unwrap_or_else(|e| Err(format!("worker panicked: {e}")));

            strong.running.fetch_sub(1, Ordering::SeqCst);
            match outcome {
                Ok(result) => strong.transition(&job_id, JobStatus::Done, Some(result), None),
                Err(e) => {
                    tracing::warn!(job = %job_id, error = %e, "generation failed");
                    strong.transition(&job_id, JobStatus::Failed, None, Some(e))
                }
            }
            drop(permit);
        });
    }
}
