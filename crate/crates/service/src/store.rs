//! In-memory datasets and analysis sessions.

use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use mca_core::{ActiveSet, DataMatrix};
use serde::Serialize;

/// An uploaded dataset. Never mutated after insertion.
#[derive(Debug)]
pub struct Dataset {
    pub id: String,
    pub matrix: DataMatrix,
}

/// Exclusion set over one dataset. Replaced wholesale on update, so readers
/// holding an `Arc` keep a consistent snapshot.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSession {
    pub session_id: String,
    pub dataset_id: String,
    pub excluded: BTreeSet<usize>,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
}

impl AnalysisSession {
    pub fn active_set(&self, rows: usize) -> ActiveSet {
        ActiveSet::excluding(rows, self.excluded.iter().copied()).expect("exclusions are validated on write")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StoreError {
    UnknownDataset(String),
    UnknownSession(String),
    IndexOutOfRange { index: usize, rows: usize },
}

/// Changes applied by an update: `excluded` replaces the set, then `add` and
/// `remove` are applied in that order.
#[derive(Debug, Clone, Default)]
pub struct SessionUpdate {
    pub excluded: Option<Vec<usize>>,
    pub add: Vec<usize>,
    pub remove: Vec<usize>,
}

#[derive(Debug, Default)]
pub struct Store {
    datasets: RwLock<HashMap<String, Arc<Dataset>>>,
    sessions: RwLock<HashMap<String, Arc<AnalysisSession>>>,
    next_dataset: AtomicU64,
    next_session: AtomicU64,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

fn check_indices<'a>(indices: impl IntoIterator<Item = &'a usize>, rows: usize) -> Result<(), StoreError> {
    match indices.into_iter().find(|&&i| i >= rows) {
        Some(&index) => Err(StoreError::IndexOutOfRange { index, rows }),
        None => Ok(()),
    }
}

impl Store {
    pub fn insert_dataset(&self, matrix: DataMatrix) -> Arc<Dataset> {
        let n = self.next_dataset.fetch_add(1, Ordering::Relaxed) + 1;
        let ds = Arc::new(Dataset { id: format!("d{n}"), matrix });
        self.datasets.write().expect("store lock").insert(ds.id.clone(), ds.clone());
        ds
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<Dataset>, StoreError> {
        self.datasets.read().expect("store lock").get(id).cloned().ok_or_else(|| StoreError::UnknownDataset(id.to_string()))
    }

    /// All datasets ordered by id number.
    pub fn datasets(&self) -> Vec<Arc<Dataset>> {
        let mut all: Vec<_> = self.datasets.read().expect("store lock").values().cloned().collect();
        all.sort_by_key(|d| d.id[1..].parse::<u64>().unwrap_or(u64::MAX));
        all
    }

    pub fn create_session(&self, dataset_id: &str, excluded: &[usize]) -> Result<Arc<AnalysisSession>, StoreError> {
        let ds = self.dataset(dataset_id)?;
        check_indices(excluded, ds.matrix.n_rows())?;
        let n = self.next_session.fetch_add(1, Ordering::Relaxed) + 1;
        let s = Arc::new(AnalysisSession {
            session_id: format!("s{n}"),
            dataset_id: dataset_id.to_string(),
            excluded: excluded.iter().copied().collect(),
            created_at: now_ms(),
        });
        self.sessions.write().expect("store lock").insert(s.session_id.clone(), s.clone());
        Ok(s)
    }

    /// Session `id` of dataset `dataset_id`; sessions of other datasets are not found.
    pub fn session(&self, dataset_id: &str, id: &str) -> Result<Arc<AnalysisSession>, StoreError> {
        self.dataset(dataset_id)?;
        self.sessions
            .read()
            .expect("store lock")
            .get(id)
            .filter(|s| s.dataset_id == dataset_id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(id.to_string()))
    }

    /// Applies `update` under the write lock. On error the session is unchanged.
    pub fn update_session(&self, dataset_id: &str, id: &str, update: &SessionUpdate) -> Result<Arc<AnalysisSession>, StoreError> {
        let rows = self.dataset(dataset_id)?.matrix.n_rows();
        let mut sessions = self.sessions.write().expect("store lock");
        let current = sessions.get(id).filter(|s| s.dataset_id == dataset_id).ok_or_else(|| StoreError::UnknownSession(id.to_string()))?;
        if let Some(ex) = &update.excluded {
            check_indices(ex, rows)?;
        }
        check_indices(&update.add, rows)?;
        check_indices(&update.remove, rows)?;
        let mut excluded = match &update.excluded {
            Some(ex) => ex.iter().copied().collect(),
            None => current.excluded.clone(),
        };
        excluded.extend(update.add.iter().copied());
        for r in &update.remove {
            excluded.remove(r);
        }
        let next = Arc::new(AnalysisSession { excluded, ..(**current).clone() });
        sessions.insert(id.to_string(), next.clone());
        Ok(next)
    }
}
