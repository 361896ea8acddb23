//! Transition storage and dataset I/O.
//!
//! The [`ReplayBuffer`] is the store every learner trains from: it is
//! seeded with an offline dataset and then absorbs online experience,
//! evicting oldest entries once full. Datasets live on disk in a small
//! fixed binary layout that round-trips bit for bit and preserves
//! trajectory boundaries, so experiments can be replayed exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const DATASET_MAGIC: &[u8; 4] = b"AWDS";
const DATASET_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("{what} width mismatch: buffer holds {expected}, transition has {got}")]
    WidthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("cannot sample from an empty buffer")]
    Empty,
    #[error("buffer capacity must be at least 1")]
    BadCapacity,
    #[error("transition contains a non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dataset parse error at {record}: {msg}")]
    Parse { record: String, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One environment step: the atom of datasets and buffers. `terminal`
/// marks true termination (the episode ended in an absorbing state);
/// time-limit truncation is recorded as `terminal = false` so value
/// bootstrapping stays correct.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

impl Transition {
    fn validate(&self) -> Result<(), ReplayError> {
        if self.state.len() != self.next_state.len() {
            return Err(ReplayError::WidthMismatch {
                what: "state/next_state",
                expected: self.state.len(),
                got: self.next_state.len(),
            });
        }
        if !self.state.iter().all(|v| v.is_finite()) {
            return Err(ReplayError::NonFinite("state"));
        }
        if !self.next_state.iter().all(|v| v.is_finite()) {
            return Err(ReplayError::NonFinite("next_state"));
        }
        if !self.action.iter().all(|v| v.is_finite()) {
            return Err(ReplayError::NonFinite("action"));
        }
        if !self.reward.is_finite() {
            return Err(ReplayError::NonFinite("reward"));
        }
        Ok(())
    }
}

/// Where a trajectory came from. Recorded per trajectory in dataset files
/// so mixtures (expert rollouts plus cloned-policy rollouts, or pure
/// random exploration) stay auditable after the fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Expert,
    Cloned,
    Random,
    Online,
}

impl Provenance {
    fn to_byte(self) -> u8 {
        match self {
            Provenance::Expert => 0,
            Provenance::Cloned => 1,
            Provenance::Random => 2,
            Provenance::Online => 3,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Provenance::Expert),
            1 => Some(Provenance::Cloned),
            2 => Some(Provenance::Random),
            3 => Some(Provenance::Online),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Provenance::Expert => "expert",
            Provenance::Cloned => "cloned",
            Provenance::Random => "random",
            Provenance::Online => "online",
        }
    }
}

/// An ordered run of transitions from one episode (possibly truncated).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub provenance: Provenance,
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

/// Bounded FIFO transition store. Seed it with a dataset, then feed it
/// online experience; once at capacity, pushes overwrite the oldest
/// entries. Sampling is uniform with replacement over occupied slots.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    cursor: usize,
    obs_width: Option<usize>,
    action_width: Option<usize>,
}

/// A sampled minibatch in matrix form, ready for network consumption.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub terminals: Vec<bool>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self, ReplayError> {
        if capacity == 0 {
            return Err(ReplayError::BadCapacity);
        }
        Ok(ReplayBuffer {
            capacity,
            storage: Vec::new(),
            cursor: 0,
            obs_width: None,
            action_width: None,
        })
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_width(&self) -> Option<usize> {
        self.obs_width
    }

    pub fn action_width(&self) -> Option<usize> {
        self.action_width
    }

    pub fn push(&mut self, t: Transition) -> Result<(), ReplayError> {
        t.validate()?;
        match self.obs_width {
            None => {
                self.obs_width = Some(t.state.len());
                self.action_width = Some(t.action.len());
            }
            Some(w) => {
                if t.state.len() != w {
                    return Err(ReplayError::WidthMismatch {
                        what: "state",
                        expected: w,
                        got: t.state.len(),
                    });
                }
                let aw = self.action_width.unwrap();
                if t.action.len() != aw {
                    return Err(ReplayError::WidthMismatch {
                        what: "action",
                        expected: aw,
                        got: t.action.len(),
                    });
                }
            }
        }
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
        Ok(())
    }

    /// Loads every transition of every trajectory, in order.
    pub fn push_dataset(&mut self, dataset: &Dataset) -> Result<(), ReplayError> {
        for traj in &dataset.trajectories {
            for t in &traj.transitions {
                self.push(t.clone())?;
            }
        }
        Ok(())
    }

    /// Occupied slots oldest first, regardless of ring position.
    pub fn iter_in_insertion_order(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.storage.split_at(self.cursor.min(self.storage.len()));
        older.iter().chain(newer.iter())
    }

    /// `n` uniform-with-replacement indices into occupied slots.
    pub fn sample_indices(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>, ReplayError> {
        if self.storage.is_empty() {
            return Err(ReplayError::Empty);
        }
        Ok((0..n).map(|_| rng.random_range(0..self.storage.len())).collect())
    }

    /// `n` uniform-with-replacement transitions as owned copies.
    pub fn sample_batch(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Transition>, ReplayError> {
        let idx = self.sample_indices(n, rng)?;
        Ok(idx.into_iter().map(|i| self.storage[i].clone()).collect())
    }

    /// `n` uniform-with-replacement transitions stacked into matrices.
    pub fn sample_arrays(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Batch, ReplayError> {
        let idx = self.sample_indices(n, rng)?;
        let ow = self.obs_width.unwrap();
        let aw = self.action_width.unwrap();
        let mut states = Array2::zeros((n, ow));
        let mut actions = Array2::zeros((n, aw));
        let mut rewards = Array1::zeros(n);
        let mut next_states = Array2::zeros((n, ow));
        let mut terminals = Vec::with_capacity(n);
        for (row, &i) in idx.iter().enumerate() {
            let t = &self.storage[i];
            for (c, v) in t.state.iter().enumerate() {
                states[[row, c]] = *v;
            }
            for (c, v) in t.action.iter().enumerate() {
                actions[[row, c]] = *v;
            }
            rewards[row] = t.reward;
            for (c, v) in t.next_state.iter().enumerate() {
                next_states[[row, c]] = *v;
            }
            terminals.push(t.terminal);
        }
        Ok(Batch { states, actions, rewards, next_states, terminals })
    }
}

/// Bounded trajectory store for learners whose estimators need path
/// structure (multi-step returns). Capacity counts transitions; eviction
/// removes whole oldest trajectories.
#[derive(Debug, Clone)]
pub struct TrajectoryStore {
    capacity_transitions: usize,
    trajectories: Vec<Trajectory>,
    total: usize,
}

impl TrajectoryStore {
    pub fn new(capacity_transitions: usize) -> Result<Self, ReplayError> {
        if capacity_transitions == 0 {
            return Err(ReplayError::BadCapacity);
        }
        Ok(TrajectoryStore { capacity_transitions, trajectories: Vec::new(), total: 0 })
    }

    pub fn push_trajectory(&mut self, traj: Trajectory) {
        if traj.transitions.is_empty() {
            return;
        }
        self.total += traj.transitions.len();
        self.trajectories.push(traj);
        while self.total > self.capacity_transitions && self.trajectories.len() > 1 {
            let evicted = self.trajectories.remove(0);
            self.total -= evicted.transitions.len();
        }
    }

    pub fn push_dataset(&mut self, dataset: &Dataset) {
        for traj in &dataset.trajectories {
            self.push_trajectory(traj.clone());
        }
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn total_transitions(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

/// An on-disk collection of trajectories plus the metadata needed to
/// validate it against an environment before training on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub env_name: String,
    pub obs_width: usize,
    pub action_width: usize,
    pub trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn new(env_name: impl Into<String>, obs_width: usize, action_width: usize) -> Self {
        Dataset { env_name: env_name.into(), obs_width, action_width, trajectories: Vec::new() }
    }

    pub fn total_transitions(&self) -> usize {
        self.trajectories.iter().map(|t| t.transitions.len()).sum()
    }

    fn validate(&self) -> Result<(), ReplayError> {
        for (ti, traj) in self.trajectories.iter().enumerate() {
            for (i, t) in traj.transitions.iter().enumerate() {
                let record = format!("trajectory {ti}, transition {i}");
                t.validate().map_err(|e| ReplayError::Parse { record: record.clone(), msg: e.to_string() })?;
                if t.state.len() != self.obs_width {
                    return Err(ReplayError::Parse {
                        record,
                        msg: format!("state width {} does not match header {}", t.state.len(), self.obs_width),
                    });
                }
                if t.action.len() != self.action_width {
                    return Err(ReplayError::Parse {
                        record,
                        msg: format!("action width {} does not match header {}", t.action.len(), self.action_width),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ReplayError> {
        self.validate()?;
        let mut out = Vec::new();
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        let name = self.env_name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&(self.obs_width as u32).to_le_bytes());
        out.extend_from_slice(&(self.action_width as u32).to_le_bytes());
        out.extend_from_slice(&(self.trajectories.len() as u32).to_le_bytes());
        for traj in &self.trajectories {
            out.push(traj.provenance.to_byte());
            out.extend_from_slice(&(traj.transitions.len() as u32).to_le_bytes());
            for t in &traj.transitions {
                for v in &t.state {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                for v in &t.action {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.extend_from_slice(&t.reward.to_le_bytes());
                for v in &t.next_state {
                    out.extend_from_slice(&v.to_le_bytes());
                }
                out.push(t.terminal as u8);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ReplayError> {
        let mut r = DsReader { bytes, pos: 0 };
        let magic = r.take(4, "header")?;
        if magic != DATASET_MAGIC {
            return Err(ReplayError::Parse {
                record: "header".into(),
                msg: "bad magic, not a dataset file".into(),
            });
        }
        let version = r.u32("header")?;
        if version != DATASET_VERSION {
            return Err(ReplayError::Parse {
                record: "header".into(),
                msg: format!("unsupported dataset version {version}"),
            });
        }
        let name_len = r.u16("header")? as usize;
        let env_name = String::from_utf8(r.take(name_len, "header")?.to_vec()).map_err(|_| {
            ReplayError::Parse { record: "header".into(), msg: "env name is not utf-8".into() }
        })?;
        let obs_width = r.u32("header")? as usize;
        let action_width = r.u32("header")? as usize;
        let n_traj = r.u32("header")? as usize;
        let mut trajectories = Vec::with_capacity(n_traj);
        for ti in 0..n_traj {
            let where_ = format!("trajectory {ti}");
            let prov_byte = r.take(1, &where_)?[0];
            let provenance = Provenance::from_byte(prov_byte).ok_or_else(|| ReplayError::Parse {
                record: where_.clone(),
                msg: format!("unknown provenance tag {prov_byte}"),
            })?;
            let len = r.u32(&where_)? as usize;
            let mut transitions = Vec::with_capacity(len);
            for i in 0..len {
                let record = format!("trajectory {ti}, transition {i}");
                let mut vec_of = |w: usize| -> Result<Vec<f64>, ReplayError> {
                    let mut v = Vec::with_capacity(w);
                    for _ in 0..w {
                        v.push(f64::from_le_bytes(r.take(8, &record)?.try_into().unwrap()));
                    }
                    Ok(v)
                };
                let state = vec_of(obs_width)?;
                let action = vec_of(action_width)?;
                let reward = f64::from_le_bytes(r.take(8, &record)?.try_into().unwrap());
                let next_state = {
                    let mut v = Vec::with_capacity(obs_width);
                    for _ in 0..obs_width {
                        v.push(f64::from_le_bytes(r.take(8, &record)?.try_into().unwrap()));
                    }
                    v
                };
                let terminal_byte = r.take(1, &record)?[0];
                let terminal = match terminal_byte {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(ReplayError::Parse {
                            record,
                            msg: format!("terminal flag must be 0 or 1, got {other}"),
                        })
                    }
                };
                transitions.push(Transition { state, action, reward, next_state, terminal });
            }
            trajectories.push(Trajectory { provenance, transitions });
        }
        if r.pos != bytes.len() {
            return Err(ReplayError::Parse {
                record: "end of file".into(),
                msg: format!("{} trailing bytes after last trajectory", bytes.len() - r.pos),
            });
        }
        let ds = Dataset { env_name, obs_width, action_width, trajectories };
        ds.validate()?;
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReplayError> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ReplayError> {
        let bytes = fs::read(path)?;
        Dataset::from_bytes(&bytes)
    }
}

struct DsReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> DsReader<'a> {
    fn take(&mut self, n: usize, record: &str) -> Result<&'a [u8], ReplayError> {
        if self.pos + n > self.bytes.len() {
            return Err(ReplayError::Parse {
                record: record.to_string(),
                msg: format!("truncated: wanted {n} bytes at offset {}", self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, record: &str) -> Result<u16, ReplayError> {
        Ok(u16::from_le_bytes(self.take(2, record)?.try_into().unwrap()))
    }

    fn u32(&mut self, record: &str) -> Result<u32, ReplayError> {
        Ok(u32::from_le_bytes(self.take(4, record)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn t(tag: f64) -> Transition {
        Transition {
            state: vec![tag, tag + 0.5],
            action: vec![-tag],
            reward: tag,
            next_state: vec![tag + 1.0, tag + 1.5],
            terminal: false,
        }
    }

    #[test]
    fn push_into_empty_buffer_gives_size_one() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        buf.push(t(1.0)).unwrap();
        assert_eq!(buf.len(), 1);
    }

    #[test]
    fn fifo_eviction_keeps_newest() {
        let mut buf = ReplayBuffer::new(2).unwrap();
        buf.push(t(1.0)).unwrap();
        buf.push(t(2.0)).unwrap();
        buf.push(t(3.0)).unwrap();
        let rewards: Vec<f64> = buf.iter_in_insertion_order().map(|x| x.reward).collect();
        assert_eq!(rewards, vec![2.0, 3.0]);
    }

    #[test]
    fn under_capacity_all_items_retrievable() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        for i in 0..7 {
            buf.push(t(i as f64)).unwrap();
        }
        let rewards: Vec<f64> = buf.iter_in_insertion_order().map(|x| x.reward).collect();
        assert_eq!(rewards, (0..7).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        buf.push(t(1.0)).unwrap();
        let mut bad = t(2.0);
        bad.state = vec![0.0];
        bad.next_state = vec![0.0];
        assert!(matches!(buf.push(bad), Err(ReplayError::WidthMismatch { what: "state", .. })));
        let mut bad_action = t(2.0);
        bad_action.action = vec![0.0, 0.0];
        assert!(matches!(
            buf.push(bad_action),
            Err(ReplayError::WidthMismatch { what: "action", .. })
        ));
    }

    #[test]
    fn sampling_a_singleton_buffer_repeats_it() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        buf.push(t(7.0)).unwrap();
        let mut rng = fixtures::rng(60);
        let batch = buf.sample_batch(4, &mut rng).unwrap();
        assert_eq!(batch.len(), 4);
        assert!(batch.iter().all(|x| x.reward == 7.0));
    }

    #[test]
    fn empty_buffer_sampling_errors() {
        let buf = ReplayBuffer::new(4).unwrap();
        let mut rng = fixtures::rng(61);
        assert!(matches!(buf.sample_batch(1, &mut rng), Err(ReplayError::Empty)));
    }

    #[test]
    fn sampling_is_uniform_within_binomial_bounds() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        for i in 0..10 {
            buf.push(t(i as f64)).unwrap();
        }
        let mut rng = fixtures::rng(62);
        let draws = 100_000;
        let mut counts = [0usize; 10];
        for idx in buf.sample_indices(draws, &mut rng).unwrap() {
            counts[idx] += 1;
        }
        let expect = draws as f64 / 10.0;
        let sigma = (draws as f64 * 0.1 * 0.9).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() < 5.0 * sigma,
                "slot {i} drawn {c} times, expected {expect} within {}",
                5.0 * sigma
            );
        }
    }

    #[test]
    fn fixed_seed_gives_identical_batches() {
        let mut buf = ReplayBuffer::new(16).unwrap();
        for i in 0..16 {
            buf.push(t(i as f64)).unwrap();
        }
        let a: Vec<usize> = {
            let mut rng = fixtures::rng(63);
            (0..5).flat_map(|_| buf.sample_indices(8, &mut rng).unwrap()).collect()
        };
        let b: Vec<usize> = {
            let mut rng = fixtures::rng(63);
            (0..5).flat_map(|_| buf.sample_indices(8, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn buffer_seeded_with_dataset_holds_dataset_union_online() {
        let mut ds = Dataset::new("toy", 2, 1);
        ds.trajectories.push(Trajectory {
            provenance: Provenance::Expert,
            transitions: vec![t(0.0), t(1.0)],
        });
        let mut buf = ReplayBuffer::new(100).unwrap();
        buf.push_dataset(&ds).unwrap();
        buf.push(t(50.0)).unwrap();
        let rewards: Vec<f64> = buf.iter_in_insertion_order().map(|x| x.reward).collect();
        assert_eq!(rewards, vec![0.0, 1.0, 50.0]);
    }

    #[test]
    fn sample_arrays_stacks_rows_faithfully() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        buf.push(t(3.0)).unwrap();
        let mut rng = fixtures::rng(64);
        let batch = buf.sample_arrays(2, &mut rng).unwrap();
        assert_eq!(batch.states.shape(), &[2, 2]);
        assert_eq!(batch.actions.shape(), &[2, 1]);
        assert_eq!(batch.states[[0, 0]], 3.0);
        assert_eq!(batch.states[[0, 1]], 3.5);
        assert_eq!(batch.actions[[1, 0]], -3.0);
        assert_eq!(batch.rewards[1], 3.0);
        assert_eq!(batch.next_states[[0, 0]], 4.0);
        assert_eq!(batch.terminals, vec![false, false]);
    }

    proptest! {
        #[test]
        fn fifo_matches_reference_model(capacity in 1usize..8, tags in proptest::collection::vec(0u16..1000, 0..40)) {
            let mut buf = ReplayBuffer::new(capacity).unwrap();
            let mut model: Vec<f64> = Vec::new();
            for &tag in &tags {
                let tag = tag as f64;
                buf.push(t(tag)).unwrap();
                model.push(tag);
                if model.len() > capacity {
                    model.remove(0);
                }
                let got: Vec<f64> = buf.iter_in_insertion_order().map(|x| x.reward).collect();
                prop_assert_eq!(&got, &model);
            }
        }
    }

    fn sample_dataset() -> Dataset {
        let mut ds = Dataset::new("pointmass", 2, 1);
        let mut terminal_traj = vec![t(0.0), t(1.0)];
        terminal_traj[1].terminal = true;
        ds.trajectories.push(Trajectory { provenance: Provenance::Expert, transitions: terminal_traj });
        ds.trajectories.push(Trajectory { provenance: Provenance::Random, transitions: vec![t(9.0)] });
        ds
    }

    #[test]
    fn dataset_round_trip_is_identity() {
        let ds = sample_dataset();
        let bytes = ds.to_bytes().unwrap();
        let back = Dataset::from_bytes(&bytes).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn empty_dataset_round_trips() {
        let ds = Dataset::new("chain", 5, 1);
        let back = Dataset::from_bytes(&ds.to_bytes().unwrap()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.total_transitions(), 0);
    }

    #[test]
    fn file_round_trip_preserves_trajectory_boundaries() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.awds");
        ds.save(&path).unwrap();
        let back = Dataset::load(&path).unwrap();
        assert_eq!(back.trajectories.len(), 2);
        assert_eq!(back.trajectories[0].transitions.len(), 2);
        assert!(back.trajectories[0].transitions[1].terminal);
        assert_eq!(back.trajectories[1].provenance, Provenance::Random);
    }

    #[test]
    fn truncated_file_errors_and_names_the_record() {
        let ds = sample_dataset();
        let mut bytes = ds.to_bytes().unwrap();
        bytes.truncate(bytes.len() - 5);
        let err = Dataset::from_bytes(&bytes).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("trajectory 1, transition 0"), "got: {msg}");
        assert!(msg.contains("truncated"), "got: {msg}");
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let ds = sample_dataset();
        let mut bytes = ds.to_bytes().unwrap();
        bytes.push(7);
        let err = Dataset::from_bytes(&bytes).unwrap_err();
        assert!(format!("{err}").contains("trailing"));
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = Dataset::from_bytes(b"WHAT????????").unwrap_err();
        assert!(format!("{err}").contains("magic"));
    }

    #[test]
    fn trajectory_store_evicts_whole_oldest_trajectories() {
        let mut store = TrajectoryStore::new(5).unwrap();
        let traj = |n: usize, tag: f64| Trajectory {
            provenance: Provenance::Online,
            transitions: (0..n).map(|i| t(tag + i as f64)).collect(),
        };
        store.push_trajectory(traj(3, 0.0));
        store.push_trajectory(traj(3, 10.0));
        // 6 > 5, so the first trajectory is evicted whole.
        assert_eq!(store.trajectories().len(), 1);
        assert_eq!(store.total_transitions(), 3);
        assert_eq!(store.trajectories()[0].transitions[0].reward, 10.0);
    }
}
