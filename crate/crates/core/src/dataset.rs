//! Supervision pairs and the checksummed `VPSP` record file.
//!
//! Layout (little-endian): magic `VPSP`, version `u32`, record count `u64`, then
//! fixed-size records of 32,768 grid bytes, 32 state bytes, 32 label bytes, an
//! 8-byte metadata block (object id `u16`, rotation `u8`, n_select `u8`, flags
//! `u8`, 3 zero bytes) and the CRC32 of everything before it in the record.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use thiserror::Error;

use crate::geometry::NUM_VIEWS;
use crate::planner::{nbv_oracle, PlannerError, ViewState};
use crate::sampling::{InputCase, ObjectCase};
use crate::set_cover::{solve_exact, CoverError, CoverInstance};
use crate::simulation::SimScene;
use crate::voxel::{
    extract_input_grid, OccupancyGrid, VisibilityTable, VoxelError, VoxelKey, INPUT_CELLS,
};
use crate::ElementSet;

pub const MAGIC: &[u8; 4] = b"VPSP";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
const PAYLOAD_LEN: usize = INPUT_CELLS + 2 * NUM_VIEWS + 8;
pub const RECORD_LEN: usize = PAYLOAD_LEN + 4;

/// Metadata flag: the label is a proven-minimum cover.
pub const FLAG_OPTIMAL: u8 = 1;
/// Metadata flag: the label is a one-hot next-best view.
pub const FLAG_NBV: u8 = 2;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{} uncovered voxel(s) are invisible from every unvisited view, first {:?}", .0.len(), .0.first())]
    Infeasible(Vec<VoxelKey>),
    #[error("no view observes an uncovered voxel")]
    NothingToLabel,
    #[error("not a VPSP file")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("file truncated: header promises {expected} records, {found} complete")]
    Truncated { expected: u64, found: u64 },
    #[error("checksum mismatch in record {0}")]
    Checksum(u64),
    #[error("record {0} is malformed: {1}")]
    Malformed(u64, String),
    #[error("grid has {0} cells, expected 32768")]
    GridSize(usize),
    #[error(transparent)]
    Cover(CoverError),
    #[error(transparent)]
    Planner(PlannerError),
    #[error(transparent)]
    Voxel(#[from] VoxelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PairMeta {
    pub object: ObjectCase,
    pub n_select: u8,
    pub flags: u8,
}

impl PairMeta {
    pub fn optimal(&self) -> bool {
        self.flags & FLAG_OPTIMAL != 0
    }

    pub fn is_nbv(&self) -> bool {
        self.flags & FLAG_NBV != 0
    }
}

/// Network input grid, visited views and label views.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupervisionPair {
    /// 32³ cell states (0 Unknown, 1 Free, 2 Occupied), x-fastest.
    pub grid: Vec<u8>,
    pub state: ViewState,
    pub label: u32,
    pub meta: PairMeta,
}

impl SupervisionPair {
    pub fn case(&self) -> InputCase {
        InputCase::new(self.meta.object, self.state.packed())
    }

    pub fn label_views(&self) -> Vec<usize> {
        (0..NUM_VIEWS)
            .filter(|&i| self.label >> i & 1 == 1)
            .collect()
    }

    fn encode(&self, out: &mut Vec<u8>) -> Result<(), DatasetError> {
        if self.grid.len() != INPUT_CELLS {
            return Err(DatasetError::GridSize(self.grid.len()));
        }
        let start = out.len();
        out.extend_from_slice(&self.grid);
        out.extend_from_slice(&self.state.to_bytes());
        out.extend((0..NUM_VIEWS).map(|i| (self.label >> i & 1) as u8));
        out.extend_from_slice(&self.meta.object.object_id.to_le_bytes());
        out.extend_from_slice(&[
            self.meta.object.rotation,
            self.meta.n_select,
            self.meta.flags,
            0,
            0,
            0,
        ]);
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(())
    }

    fn decode(index: u64, rec: &[u8]) -> Result<Self, DatasetError> {
        let (payload, crc) = rec.split_at(PAYLOAD_LEN);
        if crc32fast::hash(payload) != u32::from_le_bytes(crc.try_into().expect("4 bytes")) {
            return Err(DatasetError::Checksum(index));
        }
        let bad = |m: &str| DatasetError::Malformed(index, m.to_string());
        let grid = payload[..INPUT_CELLS].to_vec();
        if grid.iter().any(|&b| b > 2) {
            return Err(bad("grid byte outside 0..=2"));
        }
        let bits = |bytes: &[u8]| -> Result<u32, DatasetError> {
            bytes
                .iter()
                .enumerate()
                .try_fold(0u32, |a, (i, &b)| match b {
                    0 => Ok(a),
                    1 => Ok(a | 1 << i),
                    _ => Err(bad("flag byte outside 0..=1")),
                })
        };
        let state = ViewState::from_packed(bits(&payload[INPUT_CELLS..INPUT_CELLS + NUM_VIEWS])?);
        let label = bits(&payload[INPUT_CELLS + NUM_VIEWS..INPUT_CELLS + 2 * NUM_VIEWS])?;
        let m = &payload[INPUT_CELLS + 2 * NUM_VIEWS..];
        if m[2] >= 8 {
            return Err(bad("rotation index"));
        }
        Ok(Self {
            grid,
            state,
            label,
            meta: PairMeta {
                object: ObjectCase::new(u16::from_le_bytes([m[0], m[1]]), m[2]),
                n_select: m[3],
                flags: m[4],
            },
        })
    }
}

/// Minimum cover of the voxels the selected views miss, over unvisited views.
/// Returns the label bits and whether optimality was proven.
pub fn scop_label(
    table: &VisibilityTable,
    state: ViewState,
    node_budget: u64,
) -> Result<(u32, bool), DatasetError> {
    let covered = table.cover_of(state.visited().filter(|&v| v < table.num_views()));
    let rest = ElementSet::full(table.universe_size()).difference(&covered);
    let sets: Vec<ElementSet> = (0..table.num_views())
        .map(|v| table.view_set(v).clone())
        .collect();
    let inst =
        CoverInstance::from_element_sets(&rest, &sets, state.packed()).map_err(|e| match e {
            CoverError::Infeasible(el) => {
                DatasetError::Infeasible(el.iter().map(|&e| table.key(e as usize)).collect())
            }
            other => DatasetError::Cover(other),
        })?;
    let sol = solve_exact(&inst, node_budget);
    Ok((sol.as_mask(), sol.optimal))
}

/// One-hot label of the greedy next-best view.
pub fn nbv_label(table: &VisibilityTable, state: ViewState) -> Result<u32, DatasetError> {
    let covered = table.cover_of(state.visited().filter(|&v| v < table.num_views()));
    let v = nbv_oracle(table, &covered, state).map_err(DatasetError::Planner)?;
    if table.view_set(v).difference_count(&covered) == 0 {
        return Err(DatasetError::NothingToLabel);
    }
    Ok(1 << v)
}

/// Partial map built only from the selected views' observations.
pub fn partial_map(scene: &SimScene, state: ViewState) -> Result<OccupancyGrid, VoxelError> {
    let mut map = OccupancyGrid::unknown_like(&scene.world.grid);
    for v in state.visited() {
        map.insert_observation(&scene.per_view[v], scene.views.view(v).position)?;
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    SetCover { node_budget: u64 },
    Nbv,
}

/// Builds the supervision pair for one input case of this scene's object.
pub fn generate_pair(
    scene: &SimScene,
    case: InputCase,
    kind: LabelKind,
) -> Result<SupervisionPair, DatasetError> {
    let state = case.state();
    let (label, flags) = match kind {
        LabelKind::SetCover { node_budget } => {
            let (label, optimal) = scop_label(&scene.table, state, node_budget)?;
            (label, if optimal { FLAG_OPTIMAL } else { 0 })
        }
        LabelKind::Nbv => (nbv_label(&scene.table, state)?, FLAG_NBV),
    };
    let map = partial_map(scene, state)?;
    let w = &scene.world;
    let grid = extract_input_grid(&map, w.o_size, w.object_center, w.tabletop_z)?;
    Ok(SupervisionPair {
        grid: grid.to_bytes(),
        state,
        label,
        meta: PairMeta {
            object: case.object,
            n_select: case.n_select() as u8,
            flags,
        },
    })
}

fn header(count: u64) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[..4].copy_from_slice(MAGIC);
    h[4..8].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    h[8..].copy_from_slice(&count.to_le_bytes());
    h
}

/// Appends records; the header count is patched on `finish`.
pub struct DatasetWriter {
    out: BufWriter<File>,
    count: u64,
    buf: Vec<u8>,
}

impl DatasetWriter {
    pub fn create(path: &Path) -> Result<Self, DatasetError> {
        let mut f = File::create(path)?;
        f.write_all(&header(0))?;
        Ok(Self {
            out: BufWriter::new(f),
            count: 0,
            buf: Vec::with_capacity(RECORD_LEN),
        })
    }

    /// Reopens an existing file after an interruption: keeps the longest prefix
    /// of intact records, drops anything after it, and returns those records.
    pub fn resume(path: &Path) -> Result<(Self, Vec<SupervisionPair>), DatasetError> {
        let mut f = OpenOptions::new().read(true).write(true).open(path)?;
        let mut head = [0u8; HEADER_LEN];
        f.read_exact(&mut head)?;
        check_header(&head)?;
        let mut kept = Vec::new();
        let mut reader = BufReader::new(&mut f);
        let mut rec = vec![0u8; RECORD_LEN];
        loop {
            match read_full(&mut reader, &mut rec)? {
                RECORD_LEN => match SupervisionPair::decode(kept.len() as u64, &rec) {
                    Ok(p) => kept.push(p),
                    Err(_) => break,
                },
                _ => break,
            }
        }
        drop(reader);
        let end = (HEADER_LEN + kept.len() * RECORD_LEN) as u64;
        f.set_len(end)?;
        f.seek(SeekFrom::Start(8))?;
        f.write_all(&(kept.len() as u64).to_le_bytes())?;
        f.seek(SeekFrom::Start(end))?;
        let count = kept.len() as u64;
        Ok((
            Self {
                out: BufWriter::new(f),
                count,
                buf: Vec::with_capacity(RECORD_LEN),
            },
            kept,
        ))
    }

    pub fn append(&mut self, pair: &SupervisionPair) -> Result<(), DatasetError> {
        self.buf.clear();
        pair.encode(&mut self.buf)?;
        self.out.write_all(&self.buf)?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Flushes records and writes the final count into the header.
    pub fn finish(mut self) -> Result<u64, DatasetError> {
        self.out.flush()?;
        let f = self.out.get_mut();
        f.seek(SeekFrom::Start(8))?;
        f.write_all(&self.count.to_le_bytes())?;
        f.sync_all()?;
        Ok(self.count)
    }
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..])? {
            0 => break,
            k => n += k,
        }
    }
    Ok(n)
}

fn check_header(head: &[u8; HEADER_LEN]) -> Result<u64, DatasetError> {
    if &head[..4] != MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(DatasetError::Version(version));
    }
    Ok(u64::from_le_bytes(head[8..].try_into().expect("8 bytes")))
}

pub fn encode_dataset(pairs: &[SupervisionPair]) -> Result<Vec<u8>, DatasetError> {
    let mut out = Vec::with_capacity(HEADER_LEN + pairs.len() * RECORD_LEN);
    out.extend_from_slice(&header(pairs.len() as u64));
    for p in pairs {
        p.encode(&mut out)?;
    }
    Ok(out)
}

/// Strict decode: every promised record must be present and intact.
pub fn decode_dataset(bytes: &[u8]) -> Result<Vec<SupervisionPair>, DatasetError> {
    if bytes.len() < HEADER_LEN {
        return Err(if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            DatasetError::BadMagic
        } else {
            DatasetError::Truncated {
                expected: 0,
                found: 0,
            }
        });
    }
    let count = check_header(bytes[..HEADER_LEN].try_into().expect("header"))?;
    let body = &bytes[HEADER_LEN..];
    let complete = (body.len() / RECORD_LEN) as u64;
    if complete < count {
        return Err(DatasetError::Truncated {
            expected: count,
            found: complete,
        });
    }
    if body.len() as u64 != count * RECORD_LEN as u64 {
        return Err(DatasetError::Malformed(
            count,
            "trailing bytes after the last record".into(),
        ));
    }
    body.chunks_exact(RECORD_LEN)
        .enumerate()
        .map(|(i, rec)| SupervisionPair::decode(i as u64, rec))
        .collect()
}

pub fn write_dataset(pairs: &[SupervisionPair], path: &Path) -> Result<(), DatasetError> {
    let mut w = DatasetWriter::create(path)?;
    for p in pairs {
        w.append(p)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<SupervisionPair>, DatasetError> {
    decode_dataset(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng) -> SupervisionPair {
        let state = rng.gen::<u32>() | 1;
        SupervisionPair {
            grid: (0..INPUT_CELLS).map(|_| rng.gen_range(0..3)).collect(),
            state: ViewState::from_packed(state),
            label: rng.gen::<u32>() & !state,
            meta: PairMeta {
                object: ObjectCase::new(rng.gen(), rng.gen_range(0..8)),
                n_select: state.count_ones() as u8,
                flags: rng.gen_range(0..4),
            },
        }
    }

    fn micro_table() -> VisibilityTable {
        let mut sets = vec![vec![]; NUM_VIEWS];
        sets[1] = vec![0, 1, 2];
        sets[2] = vec![1, 2, 3];
        sets[3] = vec![0, 3, 4];
        VisibilityTable::from_element_sets(5, &sets).unwrap()
    }

    #[test]
    fn micro_instance_label() {
        let (label, optimal) = scop_label(&micro_table(), ViewState::new(), 1_000_000).unwrap();
        assert_eq!(label, 1 << 2 | 1 << 3);
        assert!(optimal);
    }

    #[test]
    fn all_selected_gives_empty_label() {
        let (label, optimal) =
            scop_label(&micro_table(), ViewState::from_packed(u32::MAX), 1000).unwrap();
        assert_eq!(label, 0);
        assert!(optimal);
    }

    #[test]
    fn nbv_label_is_one_hot_at_the_largest_gain() {
        let mut sets = vec![vec![]; NUM_VIEWS];
        sets[4] = vec![0, 1, 2];
        sets[9] = vec![3, 4, 5, 6, 7];
        sets[0] = vec![8];
        let t = VisibilityTable::from_element_sets(9, &sets).unwrap();
        assert_eq!(nbv_label(&t, ViewState::new().with(0)).unwrap(), 1 << 9);
        let done = ViewState::new().with(0).with(4).with(9);
        assert!(matches!(
            nbv_label(&t, done),
            Err(DatasetError::NothingToLabel)
        ));
    }

    #[test]
    fn round_trip_and_empty_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<SupervisionPair> = (0..20).map(|_| random_pair(&mut rng)).collect();
        let bytes = encode_dataset(&pairs).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 20 * RECORD_LEN);
        assert_eq!(decode_dataset(&bytes).unwrap(), pairs);
        let empty = encode_dataset(&[]).unwrap();
        assert_eq!(empty.len(), HEADER_LEN);
        assert!(decode_dataset(&empty).unwrap().is_empty());

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.vpsp");
        write_dataset(&pairs, &p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), bytes);
        assert_eq!(read_dataset(&p).unwrap(), pairs);
    }

    #[test]
    fn corruption_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs: Vec<SupervisionPair> = (0..3).map(|_| random_pair(&mut rng)).collect();
        let bytes = encode_dataset(&pairs).unwrap();
        let mut c = bytes.clone();
        c[HEADER_LEN + RECORD_LEN + 100] ^= 0x40;
        assert!(matches!(decode_dataset(&c), Err(DatasetError::Checksum(1))));
        assert!(matches!(
            decode_dataset(&bytes[..bytes.len() - 1]),
            Err(DatasetError::Truncated {
                expected: 3,
                found: 2
            })
        ));
        let mut v = bytes.clone();
        v[4] = 9;
        assert!(matches!(decode_dataset(&v), Err(DatasetError::Version(9))));
        let mut m = bytes;
        m[0] = b'X';
        assert!(matches!(decode_dataset(&m), Err(DatasetError::BadMagic)));
    }

    #[test]
    fn resume_keeps_intact_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pairs: Vec<SupervisionPair> = (0..5).map(|_| random_pair(&mut rng)).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.vpsp");
        // an interrupted writer: three records plus half of a fourth, count never patched
        let full = encode_dataset(&pairs).unwrap();
        let mut partial = header(0).to_vec();
        partial.extend_from_slice(&full[HEADER_LEN..HEADER_LEN + 3 * RECORD_LEN + RECORD_LEN / 2]);
        std::fs::write(&p, &partial).unwrap();
        let (mut w, kept) = DatasetWriter::resume(&p).unwrap();
        assert_eq!(kept, pairs[..3]);
        for q in &pairs[3..] {
            w.append(q).unwrap();
        }
        assert_eq!(w.finish().unwrap(), 5);
        assert_eq!(std::fs::read(&p).unwrap(), full);
    }
}
