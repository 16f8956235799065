//! On-disk formats.
//!
//! Binary files start with a 10-byte magic line, then one line of UTF-8
//! JSON header, then a raw little-endian payload:
//!
//! | magic        | header fields                                   | payload |
//! |--------------|-------------------------------------------------|---------|
//! | `WMGF-VOL1`  | `dims`, `voxel_size_mm`, `tr_seconds` (4D only) | f64 voxels, x fastest, time slowest |
//! | `WMGF-ODF1`  | `dims`, `voxel_size_mm`, `n_dirs`, `directions`, `n_voxels` | per voxel: u64 flat index, `n_dirs` f64 |
//! | `WMGF-GRF1`  | `n_vertices`, `n_edges`, `dims`, `voxel_size_mm`, `config` | u64 row pointers, u64 columns, f64 weights, u64 vertex voxels |
//!
//! Streamlines are plain JSON: `{"streamlines": [[[x, y, z], ...], ...]}`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{GraphBuildConfig, VoxelGraph};
use crate::odf::OdfField;
use crate::streamline::StreamlineSet;
use crate::volume::{AnyVolume, Grid, Volume3D, Volume4D};

pub const VOLUME_MAGIC: &[u8] = b"WMGF-VOL1\n";
pub const ODF_MAGIC: &[u8] = b"WMGF-ODF1\n";
pub const GRAPH_MAGIC: &[u8] = b"WMGF-GRF1\n";

// ---------------------------------------------------------------------------
// framing helpers

fn frame(magic: &[u8], header: &impl Serialize) -> Result<Vec<u8>> {
    let mut out = magic.to_vec();
    let json = serde_json::to_vec(header)
        .map_err(|e| Error::format("header", e.to_string()))?;
    out.extend_from_slice(&json);
    out.push(b'\n');
    Ok(out)
}

fn unframe<'a>(bytes: &'a [u8], magic: &[u8]) -> Result<(Map<String, Value>, &'a [u8])> {
    if !bytes.starts_with(magic) {
        return Err(Error::format(
            "magic",
            format!(
                "expected {:?}",
                String::from_utf8_lossy(&magic[..magic.len() - 1])
            ),
        ));
    }
    let rest = &bytes[magic.len()..];
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format("header", "missing newline after JSON header"))?;
    let text = std::str::from_utf8(&rest[..nl])
        .map_err(|_| Error::format("header", "header is not valid UTF-8"))?;
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::format("header", e.to_string()))?;
    match value {
        Value::Object(map) => Ok((map, &rest[nl + 1..])),
        _ => Err(Error::format("header", "header must be a JSON object")),
    }
}

fn get<'a>(h: &'a Map<String, Value>, field: &str) -> Result<&'a Value> {
    h.get(field)
        .ok_or_else(|| Error::format(field, "missing"))
}

fn get_usize(h: &Map<String, Value>, field: &str) -> Result<usize> {
    get(h, field)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::format(field, "expected a non-negative integer"))
}

fn get_usize_array(h: &Map<String, Value>, field: &str) -> Result<Vec<usize>> {
    let arr = get(h, field)?
        .as_array()
        .ok_or_else(|| Error::format(field, "expected an array"))?;
    arr.iter()
        .map(|v| {
            v.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::format(field, "expected non-negative integers"))
        })
        .collect()
}

fn get_f64_array(v: &Value, field: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::format(field, "expected an array"))?;
    arr.iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| Error::format(field, "expected numbers"))
        })
        .collect()
}

fn get_grid(h: &Map<String, Value>, n_dims: &[usize]) -> Result<(Vec<usize>, Grid)> {
    let dims = get_usize_array(h, "dims")?;
    if !n_dims.contains(&dims.len()) {
        return Err(Error::format(
            "dims",
            format!("expected {n_dims:?} entries, got {}", dims.len()),
        ));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::format("dims", "every dimension must be positive"));
    }
    let vs = match h.get("voxel_size_mm") {
        Some(v) => get_f64_array(v, "voxel_size_mm")?,
        None => vec![1.0; 3],
    };
    if vs.len() != 3 {
        return Err(Error::format("voxel_size_mm", "expected 3 entries"));
    }
    let grid = Grid::new([dims[0], dims[1], dims[2]], [vs[0], vs[1], vs[2]])?;
    Ok((dims, grid))
}

fn f64s(payload: &[u8]) -> impl Iterator<Item = f64> + '_ {
    payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
}

fn u64s(payload: &[u8]) -> impl Iterator<Item = u64> + '_ {
    payload
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// volumes

#[derive(Serialize)]
struct VolumeHeader {
    dims: Vec<usize>,
    voxel_size_mm: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    tr_seconds: Option<f64>,
}

pub fn encode_volume(vol: &AnyVolume) -> Result<Vec<u8>> {
    let (header, data) = match vol {
        AnyVolume::Vol3(v) => {
            v.validate()?;
            (
                VolumeHeader {
                    dims: v.grid.dims.to_vec(),
                    voxel_size_mm: v.grid.voxel_size_mm,
                    tr_seconds: None,
                },
                &v.data,
            )
        }
        AnyVolume::Vol4(v) => {
            v.validate()?;
            let mut dims = v.grid.dims.to_vec();
            dims.push(v.n_frames);
            (
                VolumeHeader {
                    dims,
                    voxel_size_mm: v.grid.voxel_size_mm,
                    tr_seconds: Some(v.tr_seconds),
                },
                &v.data,
            )
        }
    };
    let mut out = frame(VOLUME_MAGIC, &header)?;
    out.reserve(data.len() * 8);
    for x in data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_volume(bytes: &[u8]) -> Result<AnyVolume> {
    let (h, payload) = unframe(bytes, VOLUME_MAGIC)?;
    let (dims, grid) = get_grid(&h, &[3, 4])?;
    let expected: usize = dims.iter().product();
    if payload.len() != expected * 8 {
        return Err(Error::SizeMismatch {
            expected,
            found: payload.len() / 8,
        });
    }
    let data: Vec<f64> = f64s(payload).collect();
    if dims.len() == 3 {
        Ok(AnyVolume::Vol3(Volume3D::new(grid, data)?))
    } else {
        let tr = get(&h, "tr_seconds")?
            .as_f64()
            .ok_or_else(|| Error::format("tr_seconds", "expected a number"))?;
        Ok(AnyVolume::Vol4(Volume4D::new(grid, dims[3], tr, data)?))
    }
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<AnyVolume> {
    decode_volume(&read_bytes(path.as_ref())?)
}

pub fn write_volume(vol: &AnyVolume, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_volume(vol)?)
}

pub fn write_volume3d(vol: &Volume3D, path: impl AsRef<Path>) -> Result<()> {
    write_volume(&AnyVolume::Vol3(vol.clone()), path)
}

pub fn write_volume4d(vol: &Volume4D, path: impl AsRef<Path>) -> Result<()> {
    write_volume(&AnyVolume::Vol4(vol.clone()), path)
}

// ---------------------------------------------------------------------------
// ODF fields

#[derive(Serialize)]
struct OdfHeader<'a> {
    dims: [usize; 3],
    voxel_size_mm: [f64; 3],
    n_dirs: usize,
    directions: &'a [[f64; 3]],
    n_voxels: usize,
}

pub fn encode_odf_field(field: &OdfField) -> Result<Vec<u8>> {
    let header = OdfHeader {
        dims: field.grid.dims,
        voxel_size_mm: field.grid.voxel_size_mm,
        n_dirs: field.n_dirs(),
        directions: field.directions(),
        n_voxels: field.n_voxels(),
    };
    let mut out = frame(ODF_MAGIC, &header)?;
    for &v in field.voxels() {
        out.extend_from_slice(&(v as u64).to_le_bytes());
        for x in field.samples(v).unwrap() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_odf_field(bytes: &[u8]) -> Result<OdfField> {
    let (h, payload) = unframe(bytes, ODF_MAGIC)?;
    let (_, grid) = get_grid(&h, &[3])?;
    let n_dirs = get_usize(&h, "n_dirs")?;
    let n_voxels = get_usize(&h, "n_voxels")?;
    let dirs_json = get(&h, "directions")?
        .as_array()
        .ok_or_else(|| Error::format("directions", "expected an array"))?;
    if dirs_json.len() != n_dirs {
        return Err(Error::format(
            "directions",
            format!("n_dirs is {n_dirs} but {} directions listed", dirs_json.len()),
        ));
    }
    let directions = dirs_json
        .iter()
        .map(|d| {
            let v = get_f64_array(d, "directions")?;
            if v.len() != 3 {
                return Err(Error::format("directions", "each direction needs 3 entries"));
            }
            Ok([v[0], v[1], v[2]])
        })
        .collect::<Result<Vec<_>>>()?;
    let record = 8 * (1 + n_dirs);
    if payload.len() != record * n_voxels {
        return Err(Error::SizeMismatch {
            expected: (1 + n_dirs) * n_voxels,
            found: payload.len() / 8,
        });
    }
    let records = payload
        .chunks_exact(record)
        .map(|rec| {
            let idx = u64::from_le_bytes(rec[..8].try_into().unwrap()) as usize;
            (idx, f64s(&rec[8..]).collect())
        })
        .collect();
    OdfField::new(grid, directions, records)
}

pub fn read_odf_field(path: impl AsRef<Path>) -> Result<OdfField> {
    decode_odf_field(&read_bytes(path.as_ref())?)
}

pub fn write_odf_field(field: &OdfField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_odf_field(field)?)
}

// ---------------------------------------------------------------------------
// streamlines

pub fn read_streamlines(path: impl AsRef<Path>) -> Result<StreamlineSet> {
    let bytes = read_bytes(path.as_ref())?;
    let set: StreamlineSet =
        serde_json::from_slice(&bytes).map_err(|e| Error::Schema(e.to_string()))?;
    set.validate()?;
    Ok(set)
}

pub fn write_streamlines(set: &StreamlineSet, path: impl AsRef<Path>) -> Result<()> {
    set.validate()?;
    let json = serde_json::to_vec(set).map_err(|e| Error::Schema(e.to_string()))?;
    write_bytes(path.as_ref(), &json)
}

// ---------------------------------------------------------------------------
// graphs

#[derive(Serialize)]
struct GraphHeader {
    n_vertices: usize,
    n_edges: usize,
    dims: [usize; 3],
    voxel_size_mm: [f64; 3],
    config: Option<GraphBuildConfig>,
}

pub fn encode_graph(graph: &VoxelGraph) -> Result<Vec<u8>> {
    let grid = graph.grid();
    let header = GraphHeader {
        n_vertices: graph.n_vertices(),
        n_edges: graph.n_edges(),
        dims: grid.dims,
        voxel_size_mm: grid.voxel_size_mm,
        config: graph.config().copied(),
    };
    let mut out = frame(GRAPH_MAGIC, &header)?;
    for &p in graph.row_ptr() {
        out.extend_from_slice(&(p as u64).to_le_bytes());
    }
    for &c in graph.col_idx() {
        out.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for &w in graph.weights() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for &v in graph.vertex_voxels() {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_graph(bytes: &[u8]) -> Result<VoxelGraph> {
    let (h, payload) = unframe(bytes, GRAPH_MAGIC)?;
    let (_, grid) = get_grid(&h, &[3])?;
    let n = get_usize(&h, "n_vertices")?;
    let n_edges = get_usize(&h, "n_edges")?;
    let config = match h.get("config") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            serde_json::from_value::<GraphBuildConfig>(v.clone())
                .map_err(|e| Error::format("config", e.to_string()))?,
        ),
    };
    let nnz = 2 * n_edges;
    let words = (n + 1) + nnz + nnz + n;
    if payload.len() != words * 8 {
        return Err(Error::SizeMismatch {
            expected: words,
            found: payload.len() / 8,
        });
    }
    let (rp, rest) = payload.split_at((n + 1) * 8);
    let (ci, rest) = rest.split_at(nnz * 8);
    let (wt, vt) = rest.split_at(nnz * 8);
    VoxelGraph::from_csr(
        grid,
        u64s(vt).map(|v| v as usize).collect(),
        u64s(rp).map(|v| v as usize).collect(),
        u64s(ci).map(|v| v as usize).collect(),
        f64s(wt).collect(),
        config,
    )
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<VoxelGraph> {
    decode_graph(&read_bytes(path.as_ref())?)
}

pub fn write_graph(graph: &VoxelGraph, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_graph(graph)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odf::fibonacci_sphere;

    fn grid222() -> Grid {
        Grid::new([2, 2, 2], [1.0; 3]).unwrap()
    }

    #[test]
    fn zero_volume_round_trip() {
        let v = AnyVolume::Vol3(Volume3D::zeros(grid222()));
        assert_eq!(decode_volume(&encode_volume(&v).unwrap()).unwrap(), v);
    }

    #[test]
    fn x_fastest_ordering() {
        let v = Volume3D::new(grid222(), (0..8).map(|i| i as f64).collect()).unwrap();
        let back = decode_volume(&encode_volume(&AnyVolume::Vol3(v)).unwrap())
            .unwrap()
            .into_3d()
            .unwrap();
        assert_eq!(back.get(1, 0, 0), 1.0);
        assert_eq!(back.get(0, 1, 0), 2.0);
        assert_eq!(back.get(0, 0, 1), 4.0);
    }

    #[test]
    fn truncated_payload() {
        let v = AnyVolume::Vol3(Volume3D::zeros(grid222()));
        let mut bytes = encode_volume(&v).unwrap();
        bytes.truncate(bytes.len() - 8);
        assert!(matches!(
            decode_volume(&bytes),
            Err(Error::SizeMismatch {
                expected: 8,
                found: 7
            })
        ));
    }

    #[test]
    fn malformed_header_names_field() {
        let mut bytes = VOLUME_MAGIC.to_vec();
        bytes.extend_from_slice(br#"{"dims":[2,2],"voxel_size_mm":[1,1,1]}"#);
        bytes.push(b'\n');
        match decode_volume(&bytes) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "dims"),
            other => panic!("unexpected {other:?}"),
        }
        let mut bytes = VOLUME_MAGIC.to_vec();
        bytes.extend_from_slice(br#"{"dims":[1,1,1],"voxel_size_mm":[1,-1,1]}"#);
        bytes.push(b'\n');
        bytes.extend_from_slice(&0f64.to_le_bytes());
        match decode_volume(&bytes) {
            Err(Error::Format { field, .. }) => assert_eq!(field, "voxel_size_mm"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(
            decode_volume(b"NOPE\n{}\n"),
            Err(Error::Format { field, .. }) if field == "magic"
        ));
    }

    #[test]
    fn four_d_with_one_frame_rejected() {
        let v = Volume4D {
            grid: grid222(),
            n_frames: 1,
            tr_seconds: 1.0,
            data: vec![0.0; 8],
        };
        assert!(matches!(
            encode_volume(&AnyVolume::Vol4(v)),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn four_d_header_carries_tr() {
        let v = Volume4D::new(grid222(), 2, 0.72, vec![1.5; 16]).unwrap();
        let bytes = encode_volume(&AnyVolume::Vol4(v.clone())).unwrap();
        let text = String::from_utf8_lossy(&bytes[..80]);
        assert!(text.contains("\"tr_seconds\":0.72"));
        assert_eq!(decode_volume(&bytes).unwrap(), AnyVolume::Vol4(v));
    }

    #[test]
    fn odf_single_voxel_round_trip() {
        let f = OdfField::new(
            Grid::new([1, 1, 1], [1.0; 3]).unwrap(),
            fibonacci_sphere(98),
            vec![(0, vec![1.0; 98])],
        )
        .unwrap();
        assert_eq!(decode_odf_field(&encode_odf_field(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn odf_direction_norm_checked_on_read() {
        let f = OdfField::new(
            Grid::new([1, 1, 1], [1.0; 3]).unwrap(),
            fibonacci_sphere(98),
            vec![(0, vec![1.0; 98])],
        )
        .unwrap();
        let bytes = encode_odf_field(&f).unwrap();
        let text = String::from_utf8(bytes[10..].split(|&b| b == b'\n').next().unwrap().to_vec())
            .unwrap();
        let mut h: Value = serde_json::from_str(&text).unwrap();
        h["directions"][0] = serde_json::json!([0.5, 0.0, 0.0]);
        let mut forged = ODF_MAGIC.to_vec();
        forged.extend_from_slice(h.to_string().as_bytes());
        forged.push(b'\n');
        forged.extend_from_slice(&bytes[10 + text.len() + 1..]);
        match decode_odf_field(&forged) {
            Err(Error::Format { field, message }) => {
                assert_eq!(field, "directions");
                assert!(message.contains("norm 0.5"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
