use kdvnet::checkpoint::{self, CheckpointFile};
use kdvnet::dataset;
use kdvnet::Error;
use kdvnet_core::kdv::{generate_dataset, Dataset, GridSpec, PdeParams};
use kdvnet_core::training::{train_operator, HeadKind, OperatorKind, TrainingConfig, TrainingMode};

fn small_grid() -> GridSpec {
    GridSpec {
        period: 10.0,
        nx: 16,
        dt_record: 0.025,
        nt_record: 12,
    }
}

fn small_dataset(n: usize, seed: u64) -> Dataset {
    generate_dataset(n, &small_grid(), &PdeParams::default(), seed, 8).unwrap()
}

fn set_version(bytes: &mut [u8], major: u16, minor: u16) {
    bytes[4..6].copy_from_slice(&major.to_le_bytes());
    bytes[6..8].copy_from_slice(&minor.to_le_bytes());
    let n = bytes.len();
    let crc = crc32(&bytes[..n - 4]);
    bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
}

// bitwise CRC-32 (IEEE), independent of the implementation under test
fn crc32(data: &[u8]) -> u32 {
    let mut crc = !0u32;
    for &b in data {
        crc ^= b as u32;
        for _ in 0..8 {
            crc = if crc & 1 != 0 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
        }
    }
    !crc
}

#[test]
fn dataset_round_trip_is_exact() {
    let ds = small_dataset(10, 3);
    let bytes = dataset::encode(&ds);
    let back = dataset::decode(&bytes).unwrap();
    assert!(back.warnings.is_empty());
    assert_eq!(back.value, ds);
    assert_eq!(dataset::encode(&back.value), bytes);
}

#[test]
fn dataset_layout_matches_header_description() {
    let ds = small_dataset(3, 1);
    let bytes = dataset::encode(&ds);
    let g = small_grid();
    let per_sample = 4 * 8 + 1 + (g.nt_record + 1) * g.nx * 8;
    assert_eq!(bytes.len(), 64 + 3 * per_sample + 4);
    assert_eq!(&bytes[..4], b"KDVD");
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 3);
    assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), g.nt_record as u32);
    assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), g.nx as u32);
    assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), g.dt_record);
    assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), -6.0);
    let n = bytes.len();
    assert_eq!(u32::from_le_bytes(bytes[n - 4..].try_into().unwrap()), crc32(&bytes[..n - 4]));
    // first sample's split tag follows its four parameters
    assert_eq!(bytes[64 + 32], ds.splits[0] as u8);
}

#[test]
fn parallel_generation_equals_sequential() {
    let grid = small_grid();
    let seq = generate_dataset(12, &grid, &PdeParams::default(), 9, 8).unwrap();
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let par = pool.install(|| dataset::generate(12, &grid, &PdeParams::default(), 9, 8)).unwrap();
        assert_eq!(dataset::encode(&par), dataset::encode(&seq));
    }
}

#[test]
fn corrupted_magic_is_a_format_error() {
    let mut bytes = dataset::encode(&small_dataset(2, 0));
    bytes[0] = b'X';
    assert!(matches!(dataset::decode(&bytes), Err(Error::BadMagic { .. })));
}

#[test]
fn older_minor_version_loads_with_warning() {
    let ds = small_dataset(2, 0);
    let mut bytes = dataset::encode(&ds);
    set_version(&mut bytes, dataset::VERSION.0, dataset::VERSION.1 - 1);
    let back = dataset::decode(&bytes).unwrap();
    assert_eq!(back.value, ds);
    assert_eq!(back.warnings.len(), 1);
}

#[test]
fn newer_major_version_is_rejected() {
    let mut bytes = dataset::encode(&small_dataset(2, 0));
    set_version(&mut bytes, dataset::VERSION.0 + 1, 0);
    assert!(matches!(dataset::decode(&bytes), Err(Error::Version { major: 2, .. })));
}

#[test]
fn truncation_and_corruption_are_told_apart() {
    let bytes = dataset::encode(&small_dataset(2, 0));
    let short = &bytes[..bytes.len() - 9];
    assert!(matches!(dataset::decode(short), Err(Error::Truncated { .. })));
    let mut flipped = bytes.clone();
    flipped[100] ^= 0x40;
    assert!(matches!(dataset::decode(&flipped), Err(Error::Checksum { .. })));
}

fn tiny_fno() -> TrainingConfig {
    let mut c = TrainingConfig::desk(OperatorKind::Fno, HeadKind::None, TrainingMode::TwoStep);
    c.horizon = 8;
    c.fno.width = 4;
    c.fno.modes_t = 4;
    c.fno.modes_x = 4;
    c.fno.projection = 8;
    c.operator_opt.epochs = 2;
    c.eval_every = 1;
    c
}

fn trained_file() -> (Dataset, CheckpointFile) {
    let ds = small_dataset(24, 5);
    let cfg = tiny_fno();
    let out = train_operator(&ds, &cfg).unwrap();
    let ck = out.model.to_checkpoint(&[("operator", &out.operator_history)]);
    let file = CheckpointFile::new(out.model.config.clone(), ck, &ds.grid);
    (ds, file)
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let (ds, file) = trained_file();
    let bytes = checkpoint::encode(&file).unwrap();
    assert_eq!(&bytes[..4], b"NOCK");
    let back = checkpoint::decode(&bytes).unwrap().value;
    assert_eq!(back, file);
    assert_eq!(checkpoint::encode(&back).unwrap(), bytes);
    let model = back.model_for(&ds.grid).unwrap();
    let original = file.model_for(&ds.grid).unwrap();
    let u0 = ds.trajectories[0].initial();
    use kdvnet_core::eval::Predictor;
    assert_eq!(model.predict(u0, 1).unwrap(), original.predict(u0, 1).unwrap());
}

#[test]
fn checkpoint_errors_are_distinct() {
    let (_, file) = trained_file();
    let bytes = checkpoint::encode(&file).unwrap();
    assert!(matches!(
        checkpoint::decode(&bytes[..bytes.len() / 2]),
        Err(Error::Truncated { .. })
    ));
    let mut flipped = bytes.clone();
    flipped[bytes.len() - 40] ^= 1;
    assert!(matches!(checkpoint::decode(&flipped), Err(Error::Checksum { .. })));
    let mut magic = bytes.clone();
    magic[3] = b'X';
    assert!(matches!(checkpoint::decode(&magic), Err(Error::BadMagic { .. })));
    let mut newer = bytes.clone();
    set_version(&mut newer, checkpoint::VERSION.0 + 1, 0);
    assert!(matches!(checkpoint::decode(&newer), Err(Error::Version { .. })));
}

#[test]
fn model_refuses_another_grid() {
    let (ds, file) = trained_file();
    let mut other = ds.grid;
    other.nx = 32;
    assert!(file.model_for(&other).is_err());
    other = ds.grid;
    other.dt_record *= 2.0;
    assert!(file.model_for(&other).is_err());
}

#[test]
fn checkpoint_for_another_architecture_is_rejected() {
    let (ds, file) = trained_file();
    let mut wrong = file.clone();
    wrong.config.fno.width += 1;
    wrong.checkpoint.config_hash = wrong.config.hash();
    assert!(wrong.model_for(&ds.grid).is_err());
}
