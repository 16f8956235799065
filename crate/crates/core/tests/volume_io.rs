use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use wmgf_core::io::{
    decode_graph, decode_odf_field, decode_volume, encode_graph, encode_odf_field, encode_volume, read_odf_field,
    read_streamlines, read_volume, write_graph, write_odf_field, write_streamlines, write_volume, write_volume3d,
    write_volume4d, VOLUME_MAGIC,
};
use wmgf_core::odf::fibonacci_sphere;
use wmgf_core::{AnyVolume, Error, Grid, Mask, OdfField, StreamlineSet, Volume3D, Volume4D};

fn random_volume(seed: u64, dims: [usize; 3]) -> Volume3D {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = Grid::new(dims, [1.0, 1.25, 2.5]).unwrap();
    let data = (0..grid.n_voxels()).map(|_| rng.random::<f64>() * 200.0 - 100.0).collect();
    Volume3D::new(grid, data).unwrap()
}

#[test]
fn zero_volume_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.vol");
    let vol = Volume3D::zeros(Grid::new([2, 2, 2], [1.0; 3]).unwrap());
    write_volume3d(&vol, &path).unwrap();
    assert_eq!(read_volume(&path).unwrap(), AnyVolume::Vol3(vol));
}

#[test]
fn short_payload_is_a_size_mismatch() {
    let vol = Volume3D::zeros(Grid::new([2, 2, 2], [1.0; 3]).unwrap());
    let mut bytes = encode_volume(&AnyVolume::Vol3(vol)).unwrap();
    bytes.truncate(bytes.len() - 8);
    assert!(matches!(
        decode_volume(&bytes),
        Err(Error::SizeMismatch { expected: 8, found: 7 })
    ));
}

#[test]
fn payload_is_x_fastest() {
    let grid = Grid::new([2, 2, 2], [1.0; 3]).unwrap();
    let vol = Volume3D::new(grid, (0..8).map(f64::from).collect()).unwrap();
    let bytes = encode_volume(&AnyVolume::Vol3(vol)).unwrap();
    let back = decode_volume(&bytes).unwrap().into_3d().unwrap();
    assert_eq!(back.get(1, 0, 0), 1.0);
    assert_eq!(back.get(0, 1, 0), 2.0);
    assert_eq!(back.get(0, 0, 1), 4.0);
    // the last payload value is voxel (1, 1, 1)
    let tail = &bytes[bytes.len() - 8..];
    assert_eq!(f64::from_le_bytes(tail.try_into().unwrap()), 7.0);
}

#[test]
fn random_volume_seed_42_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.vol");
    let vol = random_volume(42, [3, 3, 3]);
    write_volume3d(&vol, &path).unwrap();
    assert_eq!(read_volume(&path).unwrap().into_3d().unwrap(), vol);
}

#[test]
fn single_frame_series_rejected() {
    let grid = Grid::new([2, 2, 2], [1.0; 3]).unwrap();
    assert!(matches!(
        Volume4D::new(grid, 1, 1.0, vec![0.0; 8]),
        Err(Error::Invariant(_))
    ));
}

#[test]
fn repeated_writes_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let vol = random_volume(3, [4, 3, 2]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_volume3d(&vol, &a).unwrap();
    write_volume3d(&vol, &b).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn series_round_trip_keeps_tr() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.vol");
    let grid = Grid::new([2, 3, 1], [2.0; 3]).unwrap();
    let series = Volume4D::new(grid, 4, 0.72, (0..24).map(|i| i as f64 * 0.5).collect()).unwrap();
    write_volume4d(&series, &path).unwrap();
    assert_eq!(read_volume(&path).unwrap(), AnyVolume::Vol4(series));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = read_volume("/nonexistent/volume.vol").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.is_input_error());
}

#[test]
fn header_errors_name_the_field() {
    let mut bytes = VOLUME_MAGIC.to_vec();
    bytes.extend_from_slice(b"{\"dims\":[2,2],\"voxel_size_mm\":[1,1,1]}\n");
    match decode_volume(&bytes) {
        Err(Error::Format { field, .. }) => assert_eq!(field, "dims"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn constant_odf_single_voxel_round_trips() {
    let grid = Grid::new([1, 1, 1], [1.0; 3]).unwrap();
    let field = OdfField::new(grid, fibonacci_sphere(98), vec![(0, vec![1.0; 98])]).unwrap();
    assert_eq!(decode_odf_field(&encode_odf_field(&field).unwrap()).unwrap(), field);
}

#[test]
fn half_norm_direction_rejected() {
    let grid = Grid::new([1, 1, 1], [1.0; 3]).unwrap();
    let mut dirs = fibonacci_sphere(98);
    dirs[5] = [0.5, 0.0, 0.0];
    assert!(matches!(
        OdfField::new(grid, dirs, vec![(0, vec![1.0; 98])]),
        Err(Error::Format { .. })
    ));
}

#[test]
fn random_odf_seed_7_round_trips() {
    let mut rng = StdRng::seed_from_u64(7);
    let grid = Grid::new([5, 4, 3], [1.5; 3]).unwrap();
    let mask = Mask::new(grid, (0..60).map(|_| rng.random::<f64>() < 0.5).collect()).unwrap();
    let records = mask
        .indices()
        .into_iter()
        .map(|v| (v, (0..120).map(|_| rng.random::<f64>()).collect()))
        .collect();
    let field = OdfField::new(grid, fibonacci_sphere(120), records).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.odf");
    write_odf_field(&field, &path).unwrap();
    let back = read_odf_field(&path).unwrap();
    assert_eq!(back, field);
    // a second write reproduces the file byte for byte
    let again = dir.path().join("g.odf");
    write_odf_field(&back, &again).unwrap();
    assert_eq!(std::fs::read(path).unwrap(), std::fs::read(again).unwrap());
}

#[test]
fn streamline_files() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.json");
    std::fs::write(&one, r#"{"streamlines":[[[0,0,0],[1,0,0]]]}"#).unwrap();
    assert_eq!(read_streamlines(&one).unwrap().len(), 1);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"streamlines":[[[0,0,0]]]}"#).unwrap();
    assert!(matches!(read_streamlines(&bad), Err(Error::Schema(_))));
}

#[test]
fn hundred_streamlines_round_trip() {
    let mut rng = StdRng::seed_from_u64(100);
    let lines: Vec<Vec<[f64; 3]>> = (0..100)
        .map(|_| {
            let n = rng.random_range(2..30);
            let mut p = [rng.random::<f64>() * 40.0, rng.random::<f64>() * 40.0, rng.random::<f64>() * 40.0];
            (0..n)
                .map(|_| {
                    for c in &mut p {
                        *c += rng.random::<f64>() + 0.1;
                    }
                    p
                })
                .collect()
        })
        .collect();
    let set = StreamlineSet::new(lines).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    write_streamlines(&set, &path).unwrap();
    assert_eq!(read_streamlines(&path).unwrap(), set);
}

#[test]
fn graph_round_trips_through_file() {
    let g = wmgf_core::VoxelGraph::from_edges(4, &[(0, 1, 0.5), (1, 2, 1.0), (2, 3, 0.25), (0, 3, 0.75)]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.grf");
    write_graph(&g, &path).unwrap();
    let back = wmgf_core::io::read_graph(&path).unwrap();
    assert_eq!(back.row_ptr(), g.row_ptr());
    assert_eq!(back.col_idx(), g.col_idx());
    assert_eq!(back.weights(), g.weights());
    assert_eq!(back.vertex_voxels(), g.vertex_voxels());
    assert_eq!(encode_graph(&back).unwrap(), encode_graph(&g).unwrap());
    assert!(decode_graph(&encode_graph(&g).unwrap()[..20]).is_err());
}

proptest! {
    #[test]
    fn any_volume_round_trips(
        dims in (1usize..6, 1usize..6, 1usize..6),
        nt in prop::option::of(2usize..5),
        seed in any::<u64>(),
    ) {
        let mut rng = StdRng::seed_from_u64(seed);
        let grid = Grid::new([dims.0, dims.1, dims.2], [1.0, 2.0, 0.5]).unwrap();
        let n = grid.n_voxels() * nt.unwrap_or(1);
        // include awkward values: signed zero, subnormals, extremes
        let specials = [-0.0, f64::MIN_POSITIVE / 3.0, f64::MAX, -1e-300];
        let data: Vec<f64> = (0..n)
            .map(|i| if i % 7 == 0 { specials[i % 4] } else { rng.random::<f64>() - 0.5 })
            .collect();
        let vol = match nt {
            Some(nt) => AnyVolume::Vol4(Volume4D::new(grid, nt, 2.0, data).unwrap()),
            None => AnyVolume::Vol3(Volume3D::new(grid, data).unwrap()),
        };
        let back = decode_volume(&encode_volume(&vol).unwrap()).unwrap();
        let bits = |v: &AnyVolume| -> Vec<u64> {
            match v {
                AnyVolume::Vol3(v) => v.data.iter().map(|x| x.to_bits()).collect(),
                AnyVolume::Vol4(v) => v.data.iter().map(|x| x.to_bits()).collect(),
            }
        };
        prop_assert_eq!(bits(&back), bits(&vol));
        prop_assert_eq!(back.grid(), vol.grid());
    }
}

#[test]
fn write_volume_accepts_either_kind() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v");
    let vol = AnyVolume::Vol3(random_volume(1, [2, 2, 2]));
    write_volume(&vol, &path).unwrap();
    assert_eq!(read_volume(&path).unwrap(), vol);
}
