use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::maze::Action;
use crate::neural::model_file::{read_u32, read_u8};
use crate::observation::ObservationTensor;

/// One experience tuple `(s, a, r, s', terminal)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: ObservationTensor,
    pub action: Action,
    pub reward: f32,
    pub next_state: ObservationTensor,
    pub terminal: bool,
}

impl Transition {
    pub fn new(
        state: ObservationTensor,
        action: Action,
        reward: f32,
        next_state: ObservationTensor,
        terminal: bool,
    ) -> Result<Self> {
        if state.shape() != next_state.shape() {
            return Err(Error::Shape {
                expected: state.len(),
                got: next_state.len(),
            });
        }
        Ok(Transition {
            state,
            action,
            reward,
            next_state,
            terminal,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BufferKind {
    /// Experience gathered in the environment.
    Real,
    /// Experience generated by the world model.
    Dreamed,
}

/// Capacity-bounded FIFO of transitions. Insertion order is preserved; the
/// oldest record is evicted once `capacity` is reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    kind: BufferKind,
    records: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, kind: BufferKind) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            kind,
            records: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn kind(&self) -> BufferKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if let Some(first) = self.records.front() {
            if first.state.shape() != t.state.shape() {
                return Err(Error::Shape {
                    expected: first.state.len(),
                    got: t.state.len(),
                });
            }
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(t);
        Ok(())
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.records.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.records.iter()
    }

    /// `(channels, height, width)` of stored states.
    pub fn state_shape(&self) -> Option<(usize, usize, usize)> {
        self.records.front().map(|t| t.state.shape())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let (c, h, wd) = self.state_shape().unwrap_or((0, 0, 0));
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for d in [c, h, wd] {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::new();
        for t in &self.records {
            buf.clear();
            put_f32s(&mut buf, t.state.as_slice());
            buf.push(t.action.index() as u8);
            buf.extend_from_slice(&t.reward.to_le_bytes());
            put_f32s(&mut buf, t.next_state.as_slice());
            buf.push(t.terminal as u8);
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `DVRB` stream. Kind and capacity are not stored in the file;
    /// the capacity is raised to the record count when smaller.
    pub fn read<R: Read>(mut r: R, kind: BufferKind, capacity: usize) -> Result<Self> {
        let bad = |m: &str| Error::format("DVRB", m);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        if read_u32(&mut r)? != VERSION {
            return Err(bad("unsupported version"));
        }
        let mut count = [0u8; 8];
        r.read_exact(&mut count)?;
        let count = u64::from_le_bytes(count) as usize;
        let c = read_u32(&mut r)? as usize;
        let h = read_u32(&mut r)? as usize;
        let w = read_u32(&mut r)? as usize;
        let n = c * h * w;
        if count > 0 && n == 0 {
            return Err(bad("records with an empty state shape"));
        }
        let mut buffer = ReplayBuffer::new(capacity.max(count).max(1), kind);
        let mut bytes = vec![0u8; n * 4];
        for _ in 0..count {
            r.read_exact(&mut bytes)?;
            let state = ObservationTensor::from_vec(c, h, w, get_f32s(&bytes))?;
            let action = Action::from_index(read_u8(&mut r)? as usize).ok_or_else(|| bad("bad action"))?;
            let mut rb = [0u8; 4];
            r.read_exact(&mut rb)?;
            let reward = f32::from_le_bytes(rb);
            r.read_exact(&mut bytes)?;
            let next_state = ObservationTensor::from_vec(c, h, w, get_f32s(&bytes))?;
            let terminal = match read_u8(&mut r)? {
                0 => false,
                1 => true,
                _ => return Err(bad("bad terminal flag")),
            };
            buffer.records.push_back(Transition {
                state,
                action,
                reward,
                next_state,
                terminal,
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(buffer)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>, kind: BufferKind, capacity: usize) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?), kind, capacity)
    }
}

impl<'a> IntoIterator for &'a ReplayBuffer {
    type Item = &'a Transition;
    type IntoIter = std::collections::vec_deque::Iter<'a, Transition>;

    fn into_iter(self) -> Self::IntoIter {
        self.records.iter()
    }
}

const MAGIC: &[u8; 4] = b"DVRB";
const VERSION: u32 = 1;

fn put_f32s(buf: &mut Vec<u8>, xs: &[f32]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

fn get_f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}
