use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::{simulate, uniform_grid, System, SystemSpec, TimeSeriesSample};
use super::forcing::ForcingSignal;
use crate::error::{Error, Result};

pub const N_HIST: usize = 50;
pub const N_FORE: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }
}

/// Forcing family with the ranges its parameters are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForcingFamily {
    Sigmoid { amplitude: [f64; 2], period: [f64; 2], steepness: [f64; 2] },
    DecayingSine { amplitude: [f64; 2], omega: [f64; 2], decay: [f64; 2] },
    Triangular { amplitude: [f64; 2], period: [f64; 2] },
    DecayingSinusoid { amplitude: [f64; 2], omega: [f64; 2], decay: [f64; 2], phase: [f64; 2] },
}

impl ForcingFamily {
    pub fn draw<R: Rng>(&self, rng: &mut R) -> ForcingSignal {
        let mut u = |r: [f64; 2]| if r[0] == r[1] { r[0] } else { rng.random_range(r[0]..r[1]) };
        match *self {
            ForcingFamily::Sigmoid { amplitude, period, steepness } => ForcingSignal::Sigmoid {
                amplitude: u(amplitude),
                period: u(period),
                steepness: u(steepness),
            },
            ForcingFamily::DecayingSine { amplitude, omega, decay } => ForcingSignal::DecayingSine {
                amplitude: u(amplitude),
                omega: u(omega),
                decay: u(decay),
            },
            ForcingFamily::Triangular { amplitude, period } => ForcingSignal::Triangular {
                amplitude: u(amplitude),
                period: u(period),
            },
            ForcingFamily::DecayingSinusoid { amplitude, omega, decay, phase } => ForcingSignal::DecayingSinusoid {
                amplitude: u(amplitude),
                omega: u(omega),
                decay: u(decay),
                phase: u(phase),
            },
        }
    }
}

/// Everything needed to regenerate one benchmark dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub id: u8,
    pub name: String,
    pub system: SystemSpec,
    pub horizon: f64,
    pub n_hist: usize,
    pub n_fore: usize,
    /// Sample counts for train, val and test.
    pub counts: [usize; 3],
    /// Forcing family for train, val and test.
    pub families: [ForcingFamily; 3],
}

fn shifted_families(amplitude: [f64; 2]) -> [ForcingFamily; 3] {
    [
        ForcingFamily::Sigmoid { amplitude, period: [2.0, 8.0], steepness: [2.0, 8.0] },
        ForcingFamily::DecayingSine { amplitude, omega: [0.5, 4.0], decay: [0.05, 0.5] },
        ForcingFamily::Triangular { amplitude, period: [2.0, 8.0] },
    ]
}

fn sinusoid_families() -> [ForcingFamily; 3] {
    let f = ForcingFamily::DecayingSinusoid {
        amplitude: [0.5, 2.0],
        omega: [0.5, 3.0],
        decay: [0.05, 0.5],
        phase: [0.0, 2.0 * PI],
    };
    [f.clone(), f.clone(), f]
}

impl DatasetSpec {
    /// The eight benchmark datasets, numbered 1 to 8.
    pub fn benchmark(id: u8) -> Result<Self> {
        let large = [200, 50, 130];
        let (name, system, horizon, counts, families) = match id {
            1 => ("smd", System::Smd { m: 1.0, c: 0.5, k: 5.0 }, 20.0, [10, 5, 15], shifted_families([0.5, 2.0])),
            2 => ("duffing_c0", System::Duffing { m: 1.0, c: 0.0, k1: 1.0, k3: 1.0 }, 20.47, large, sinusoid_families()),
            3 => ("duffing_c0.5", System::Duffing { m: 1.0, c: 0.5, k1: 1.0, k3: 1.0 }, 20.47, large, sinusoid_families()),
            4 => ("lorenz_rho5", System::Lorenz { sigma: 10.0, rho: 5.0, beta: 8.0 / 3.0 }, 20.47, large, sinusoid_families()),
            5 => ("lorenz_rho10", System::Lorenz { sigma: 10.0, rho: 10.0, beta: 8.0 / 3.0 }, 20.47, large, sinusoid_families()),
            6 => ("pendulum_c0", System::Pendulum { g_over_l: 1.0, c: 0.0 }, 20.47, large, sinusoid_families()),
            7 => ("pendulum_c0.5", System::Pendulum { g_over_l: 1.0, c: 0.5 }, 20.47, large, sinusoid_families()),
            8 => (
                "mackey_glass",
                System::MackeyGlass { beta: 0.1, gamma: 0.2, tau: 7.0, n: 2.0 },
                20.0,
                [10, 5, 5],
                shifted_families([0.1, 0.5]),
            ),
            other => return Err(Error::config("dataset", format!("unknown dataset id {other}; expected 1..8"))),
        };
        Ok(DatasetSpec {
            id,
            name: name.into(),
            system: SystemSpec::standard(system),
            horizon,
            n_hist: N_HIST,
            n_fore: N_FORE,
            counts,
            families,
        })
    }

    pub fn len(&self) -> usize {
        self.n_hist + self.n_fore
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.len() as f64
    }

    fn index(split: Split) -> usize {
        split.stream() as usize
    }

    pub fn count(&self, split: Split) -> usize {
        self.counts[Self::index(split)]
    }

    pub fn family(&self, split: Split) -> &ForcingFamily {
        &self.families[Self::index(split)]
    }
}

/// One generated sample plus the forcing that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSample {
    pub forcing: ForcingSignal,
    pub sample: TimeSeriesSample,
}

/// Samples of every split, generated from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub seed: u64,
    pub train: Vec<GeneratedSample>,
    pub val: Vec<GeneratedSample>,
    pub test: Vec<GeneratedSample>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[GeneratedSample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Random stream for one sample: ChaCha seeded by the dataset seed, with the
/// stream id encoding split and index.
pub fn sample_rng(seed: u64, split: Split, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((split.stream() << 32) | index as u64);
    rng
}

pub fn generate_split(spec: &DatasetSpec, seed: u64, split: Split) -> Result<Vec<GeneratedSample>> {
    let t = uniform_grid(spec.horizon, spec.len());
    (0..spec.count(split))
        .into_par_iter()
        .map(|i| {
            let forcing = spec.family(split).draw(&mut sample_rng(seed, split, i));
            let f = |tt: f64| forcing.eval(tt);
            let sample = simulate(&spec.system, &f, &t, spec.n_hist)?;
            Ok(GeneratedSample { forcing, sample })
        })
        .collect()
}

pub fn build_dataset(id: u8, seed: u64) -> Result<Dataset> {
    let spec = DatasetSpec::benchmark(id)?;
    Ok(Dataset {
        train: generate_split(&spec, seed, Split::Train)?,
        val: generate_split(&spec, seed, Split::Val)?,
        test: generate_split(&spec, seed, Split::Test)?,
        spec,
        seed,
    })
}

/// Per-split manifest written next to the sample files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dataset: DatasetSpec,
    pub split: Split,
    pub seed: u64,
    pub dt: f64,
    pub samples: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub forcing: ForcingSignal,
}

pub fn dataset_dir(root: &Path, id: u8) -> PathBuf {
    root.join(format!("ds{id}"))
}

fn sample_file(i: usize) -> String {
    format!("sample_{i:03}.csv")
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_sample_csv(path: &Path, s: &TimeSeriesSample) -> Result<()> {
    let mut text = String::from("t,x,y\n");
    for i in 0..s.len() {
        let _ = writeln!(text, "{},{},{}", fmt_f64(s.t[i]), fmt_f64(s.x[[i, 0]]), fmt_f64(s.y[[i, 0]]));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line: line as usize, reason: reason.into() }
}

/// Reads the named numeric columns from a headed CSV file.
pub fn read_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse_error(path, 1, e.to_string()))?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| parse_error(path, 1, format!("missing column `{c}`")))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); columns.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, &i) in out.iter_mut().zip(&idx) {
            let field = record.get(i).unwrap_or("");
            let v: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("`{field}` is not a number")))?;
            col.push(v);
        }
    }
    if out[0].is_empty() {
        return Err(parse_error(path, 2, "no data rows"));
    }
    Ok(out)
}

pub fn read_sample_csv(path: &Path, n_hist: usize) -> Result<TimeSeriesSample> {
    let mut cols = read_columns(path, &["t", "x", "y"])?;
    let y = cols.pop().expect("y");
    let x = cols.pop().expect("x");
    let t = cols.pop().expect("t");
    let len = t.len();
    TimeSeriesSample::new(
        t,
        Array2::from_shape_vec((len, 1), x).expect("column"),
        Array2::from_shape_vec((len, 1), y).expect("column"),
        n_hist,
    )
}

/// Writes `<root>/ds<id>/<split>/sample_###.csv` and a `manifest.json` per split.
pub fn write_dataset(root: &Path, ds: &Dataset) -> Result<PathBuf> {
    let dir = dataset_dir(root, ds.spec.id);
    for split in Split::ALL {
        let split_dir = dir.join(split.name());
        std::fs::create_dir_all(&split_dir).map_err(|e| Error::io(&split_dir, e))?;
        let mut samples = Vec::new();
        for (i, g) in ds.split(split).iter().enumerate() {
            let file = sample_file(i);
            write_sample_csv(&split_dir.join(&file), &g.sample)?;
            samples.push(ManifestEntry { file, forcing: g.forcing.clone() });
        }
        let manifest = Manifest { dataset: ds.spec.clone(), split, seed: ds.seed, dt: ds.spec.dt(), samples };
        let path = split_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(dir)
}

/// Loads one split of a dataset directory written by [`write_dataset`].
pub fn load_split(dir: &Path, split: Split) -> Result<(Manifest, Vec<TimeSeriesSample>)> {
    let split_dir = dir.join(split.name());
    let path = split_dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| parse_error(&path, e.line() as u64, e.to_string()))?;
    let samples = manifest
        .samples
        .iter()
        .map(|entry| read_sample_csv(&split_dir.join(&entry.file), manifest.dataset.n_hist))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_table() {
        let ds1 = DatasetSpec::benchmark(1).unwrap();
        assert_eq!(ds1.counts, [10, 5, 15]);
        assert_eq!(ds1.len(), 550);
        assert!((ds1.dt() - 20.0 / 550.0).abs() < 1e-15);
        let ds5 = DatasetSpec::benchmark(5).unwrap();
        assert_eq!(ds5.system.system, System::Lorenz { sigma: 10.0, rho: 10.0, beta: 8.0 / 3.0 });
        assert_eq!(ds5.system.initial_state, vec![1.0, 0.0, 0.0]);
        assert_eq!(ds5.system.output_index, 1);
        assert_eq!(ds5.counts, [200, 50, 130]);
        assert_eq!(ds5.horizon, 20.47);
        let ds8 = DatasetSpec::benchmark(8).unwrap();
        assert_eq!(ds8.system.system, System::MackeyGlass { beta: 0.1, gamma: 0.2, tau: 7.0, n: 2.0 });
        assert_eq!(ds8.counts, [10, 5, 5]);
        assert!(DatasetSpec::benchmark(9).is_err());
        assert!(DatasetSpec::benchmark(0).is_err());
    }

    #[test]
    fn sample_streams_differ() {
        let a: f64 = sample_rng(7, Split::Train, 0).random();
        let b: f64 = sample_rng(7, Split::Train, 1).random();
        let c: f64 = sample_rng(7, Split::Val, 0).random();
        let again: f64 = sample_rng(7, Split::Train, 0).random();
        assert!(a != b && a != c && b != c);
        assert_eq!(a, again);
    }

    #[test]
    fn split_families_follow_the_protocol() {
        let ds = build_dataset(1, 7).unwrap();
        assert_eq!(ds.train.len(), 10);
        assert!(ds.train.iter().all(|g| matches!(g.forcing, ForcingSignal::Sigmoid { .. })));
        assert!(ds.val.iter().all(|g| matches!(g.forcing, ForcingSignal::DecayingSine { .. })));
        assert!(ds.test.iter().all(|g| matches!(g.forcing, ForcingSignal::Triangular { .. })));
        let s = &ds.train[0].sample;
        assert_eq!((s.n_hist, s.n_fore), (50, 500));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,x,y\n0,1,2\n0.1,abc,3\n").unwrap();
        match read_sample_csv(&path, 1) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::write(&path, "t,x\n0,1\n").unwrap();
        assert!(matches!(read_sample_csv(&path, 1), Err(Error::Parse { line: 1, .. })));
    }
}
