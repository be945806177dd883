use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use crossbeam_channel::{Receiver, Sender};
use parking_lot::{Condvar, Mutex, RwLock};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::rewriter::{suggest, Candidate, CandidateId, SearchConfig};
use crate::sampler::Sample;

pub const DEFAULT_WORKERS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
    Cancelled,
    /// The budget ran out; the results are the best found in time.
    Timeout,
}

impl JobStatus {
    pub fn is_finished(self) -> bool {
        !matches!(self, JobStatus::Queued | JobStatus::Running)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JobError {
    pub code: &'static str,
    pub message: String,
}

/// What a poll reports about a job.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JobView {
    pub job_id: String,
    pub session_id: String,
    pub start_cid: CandidateId,
    pub status: JobStatus,
    /// Rows this job added to the table, once finished.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Vec<Candidate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<JobError>,
}

pub(crate) struct JobState {
    pub status: JobStatus,
    /// Search output not yet appended to the session.
    pub found: Option<Vec<Candidate>>,
    pub results: Option<Vec<Candidate>>,
    pub error: Option<(&'static str, String)>,
}

pub(crate) struct Job {
    pub id: String,
    pub session: String,
    pub start: CandidateId,
    cancel: AtomicBool,
    pub state: Mutex<JobState>,
    finished: Condvar,
}

impl Job {
    pub fn view(&self, state: &JobState) -> JobView {
        JobView {
            job_id: self.id.clone(),
            session_id: self.session.clone(),
            start_cid: self.start,
            status: state.status,
            results: state.results.clone(),
            error: state.error.clone().map(|(code, message)| JobError { code, message }),
        }
    }

    fn finish(&self, state: &mut JobState, status: JobStatus) {
        state.status = status;
        self.finished.notify_all();
    }
}

struct Task {
    job: Arc<Job>,
    expr: Expr,
    sample: Arc<Sample>,
    cfg: SearchConfig,
}

/// Suggestion jobs by id, run on a fixed pool of worker threads.
pub struct JobRegistry {
    jobs: RwLock<HashMap<String, Arc<Job>>>,
    next: AtomicU64,
    queue: Option<Sender<Task>>,
    workers: Vec<JoinHandle<()>>,
}

fn work(rx: Receiver<Task>) {
    for task in rx {
        let job = task.job;
        {
            let mut st = job.state.lock();
            if job.cancel.load(Ordering::SeqCst) {
                job.finish(&mut st, JobStatus::Cancelled);
                continue;
            }
            st.status = JobStatus::Running;
        }
        let out = panic::catch_unwind(AssertUnwindSafe(|| {
            suggest(&task.sample, &task.expr, &task.cfg, Some(&job.cancel))
        }));
        let mut st = job.state.lock();
        let status = match out {
            Ok(Ok(found)) => {
                st.found = Some(found);
                JobStatus::Done
            }
            Ok(Err(Error::Timeout { .. })) if job.cancel.load(Ordering::SeqCst) => JobStatus::Cancelled,
            Ok(Err(Error::Timeout { partial, .. })) => {
                st.found = Some(partial);
                JobStatus::Timeout
            }
            Ok(Err(e)) => {
                st.error = Some((e.code(), e.to_string()));
                JobStatus::Failed
            }
            Err(_) => {
                st.error = Some(("internal", "search panicked".to_string()));
                JobStatus::Failed
            }
        };
        job.finish(&mut st, status);
    }
}

impl JobRegistry {
    pub fn new(workers: usize) -> JobRegistry {
        let (tx, rx) = crossbeam_channel::unbounded::<Task>();
        let workers = (0..workers.max(1))
            .map(|i| {
                let rx = rx.clone();
                thread::Builder::new()
                    .name(format!("fpwb-job-{i}"))
                    .spawn(move || work(rx))
                    .expect("spawn job worker")
            })
            .collect();
        JobRegistry { jobs: RwLock::new(HashMap::new()), next: AtomicU64::new(1), queue: Some(tx), workers }
    }

    pub(crate) fn submit(
        &self,
        session: &str,
        start: CandidateId,
        expr: Expr,
        sample: Arc<Sample>,
        cfg: SearchConfig,
    ) -> String {
        let id = format!("j{}", self.next.fetch_add(1, Ordering::SeqCst));
        let job = Arc::new(Job {
            id: id.clone(),
            session: session.to_string(),
            start,
            cancel: AtomicBool::new(false),
            state: Mutex::new(JobState { status: JobStatus::Queued, found: None, results: None, error: None }),
            finished: Condvar::new(),
        });
        self.jobs.write().insert(id.clone(), job.clone());
        let task = Task { job, expr, sample, cfg };
        self.queue.as_ref().expect("registry is open").send(task).expect("workers alive");
        id
    }

    pub(crate) fn get(&self, id: &str) -> Result<Arc<Job>> {
        self.jobs.read().get(id).cloned().ok_or_else(|| Error::JobNotFound(id.to_string()))
    }

    /// Raise the cancel flag. A queued job is cancelled at once; a running
    /// one is waited for.
    pub(crate) fn cancel(&self, id: &str) -> Result<()> {
        let job = self.get(id)?;
        let mut st = job.state.lock();
        if st.status.is_finished() {
            return Ok(());
        }
        job.cancel.store(true, Ordering::SeqCst);
        if st.status == JobStatus::Queued {
            job.finish(&mut st, JobStatus::Cancelled);
        }
        while !st.status.is_finished() {
            job.finished.wait(&mut st);
        }
        Ok(())
    }

    pub(crate) fn wait(&self, id: &str) -> Result<()> {
        let job = self.get(id)?;
        let mut st = job.state.lock();
        while !st.status.is_finished() {
            job.finished.wait(&mut st);
        }
        Ok(())
    }
}

impl Drop for JobRegistry {
    fn drop(&mut self) {
        for job in self.jobs.read().values() {
            job.cancel.store(true, Ordering::SeqCst);
        }
        self.queue = None;
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}
