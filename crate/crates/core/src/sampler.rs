//! Metropolis sampling of the Gibbs measure
//! `dP ∝ exp(-β N^{-s/d} H_N) 1_{Ω^N}` and sample archives.

use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::CellIndex;
use crate::config::PointConfiguration;
use crate::energy::{default_tau_split, move_delta, total_energy, RieszParams};
use crate::error::{Result, RieszError};
use crate::field::{Domain, Field, FieldSpec};
use crate::rng::{stratified_jitter, stream_rng};

/// Accepted moves between recomputations of the cached energy.
const REFRESH_EVERY: u64 = 10_000;
/// Proposals per tuner update.
const TUNE_BATCH: u64 = 100;
pub const DEFAULT_TARGET_RATE: f64 = 0.3;

#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub params: RieszParams,
    pub field: FieldSpec,
    /// Total single-site proposals, burn-in included.
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub proposal_scale: f64,
    pub seed: u64,
    pub adapt: bool,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.field.validate()?;
        if self.field.dim() != self.params.d {
            return Err(RieszError::DimensionMismatch {
                expected: self.params.d,
                got: self.field.dim(),
            });
        }
        if self.steps <= self.burn_in {
            return Err(RieszError::InvalidParameter(format!(
                "steps ({}) must exceed burn_in ({})",
                self.steps, self.burn_in
            )));
        }
        if self.thinning == 0 {
            return Err(RieszError::InvalidParameter("thinning must be >= 1".into()));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(RieszError::InvalidParameter(format!(
                "proposal scale must be positive, got {}",
                self.proposal_scale
            )));
        }
        Ok(())
    }

    pub fn echo(&self) -> ChainEcho {
        ChainEcho {
            params: self.params,
            domain: DomainEcho::of(&self.field.domain),
            field: self.field.field.clone(),
            steps: self.steps,
            burn_in: self.burn_in,
            thinning: self.thinning,
            proposal_scale: self.proposal_scale,
            seed: self.seed,
            adapt: self.adapt,
        }
    }
}

/// Serializable description of a domain; region predicates are not recoverable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainEcho {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Whole { dim: usize },
    Region { lo: Vec<f64>, hi: Vec<f64> },
}

impl DomainEcho {
    pub fn of(domain: &Domain) -> Self {
        match domain {
            Domain::Box { lo, hi } => DomainEcho::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            Domain::Whole { dim } => DomainEcho::Whole { dim: *dim },
            Domain::Region { lo, hi, .. } => DomainEcho::Region {
                lo: lo.clone(),
                hi: hi.clone(),
            },
        }
    }

    pub fn to_domain(&self) -> Option<Domain> {
        match self {
            DomainEcho::Box { lo, hi } => Some(Domain::Box {
                lo: lo.clone(),
                hi: hi.clone(),
            }),
            DomainEcho::Whole { dim } => Some(Domain::Whole { dim: *dim }),
            DomainEcho::Region { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainEcho {
    pub params: RieszParams,
    pub domain: DomainEcho,
    pub field: Field,
    pub steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub proposal_scale: f64,
    pub seed: u64,
    pub adapt: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleArchive {
    pub snapshots: Vec<PointConfiguration>,
    /// Accepted fraction of post-burn-in proposals.
    pub acceptance_rate: f64,
    /// `H_N` of each snapshot.
    pub energy_trace: Vec<f64>,
    /// Proposal scale used after burn-in.
    pub final_proposal_scale: f64,
    pub spec: ChainEcho,
}

/// `-β N^{-s/d} H_N`, or `-∞` when a point lies outside `Ω`.
pub fn log_unnormalized_density(config: &PointConfiguration, field: &FieldSpec, params: &RieszParams) -> Result<f64> {
    if config.points().any(|p| !field.domain.contains(p)) {
        return Ok(f64::NEG_INFINITY);
    }
    let h = total_energy(config, field, params)?;
    Ok(-params.beta / params.field_weight() * h)
}

/// Robbins-Monro update of `log(scale)` toward a target acceptance rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalTuner {
    pub scale: f64,
    pub target: f64,
    updates: u64,
}

impl ProposalTuner {
    pub fn new(scale: f64, target: f64) -> Result<Self> {
        if !(target > 0.0 && target < 1.0) {
            return Err(RieszError::InvalidParameter(format!("target rate must lie in (0,1), got {target}")));
        }
        Ok(ProposalTuner {
            scale,
            target,
            updates: 0,
        })
    }

    /// Feeds the acceptance rate of the last batch and returns the new scale.
    pub fn update(&mut self, observed: f64) -> f64 {
        self.updates += 1;
        let gain = 1.0 / (self.updates as f64).sqrt();
        self.scale *= (gain * (observed - self.target)).exp();
        self.scale
    }
}

struct Chain<'a> {
    spec: &'a ChainSpec,
    config: PointConfiguration,
    cells: CellIndex,
    tau: f64,
    energy: f64,
    scale: f64,
    accepted_since_refresh: u64,
    rng: ChaCha8Rng,
    proposal: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn start(spec: &'a ChainSpec, init: Option<&PointConfiguration>, mut rng: ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let params = &spec.params;
        let config = match init {
            Some(c) => c.clone(),
            None => stratified_jitter(&spec.field, params.n, &mut rng)?,
        };
        let energy = total_energy(&config, &spec.field, params).map_err(|e| match e {
            RieszError::Singular { .. } | RieszError::OutsideDomain { .. } => RieszError::InfeasibleStart { attempts: 1 },
            other => other,
        })?;
        let tau = default_tau_split(&config);
        let cells = CellIndex::build(&config, tau)?;
        Ok(Chain {
            spec,
            cells,
            tau,
            energy,
            scale: spec.proposal_scale,
            accepted_since_refresh: 0,
            rng,
            proposal: vec![0.0; config.dim()],
            config,
        })
    }

    // One single-site Metropolis proposal; returns whether it was accepted.
    fn step(&mut self) -> Result<bool> {
        let n = self.config.len();
        let i = self.rng.random_range(0..n);
        for (k, slot) in self.proposal.iter_mut().enumerate() {
            let z: f64 = self.rng.sample(StandardNormal);
            *slot = self.config.point(i)[k] + self.scale * z;
        }
        // drawn before the domain test, on every proposal
        let u: f64 = self.rng.random();
        if !self.spec.field.domain.contains(&self.proposal) {
            return Ok(false);
        }
        let params = &self.spec.params;
        let delta = match move_delta(
            &self.config,
            i,
            &self.proposal,
            &self.spec.field,
            params,
            &self.cells,
            self.tau,
        ) {
            Ok(v) => v,
            Err(RieszError::Singular { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        let log_ratio = -params.beta / params.field_weight() * delta;
        if log_ratio >= 0.0 || u < log_ratio.exp() {
            self.config.set_point(i, &self.proposal)?;
            self.cells.relocate(i, &self.proposal);
            self.energy += delta;
            self.accepted_since_refresh += 1;
            if self.accepted_since_refresh >= REFRESH_EVERY {
                self.energy = total_energy(&self.config, &self.spec.field, params)?;
                self.accepted_since_refresh = 0;
            }
            return Ok(true);
        }
        Ok(false)
    }

    fn burn_in(&mut self, target: f64) -> Result<()> {
        let mut tuner = ProposalTuner::new(self.scale, target)?;
        let mut batch_accepts = 0;
        for t in 0..self.spec.burn_in {
            if self.step()? {
                batch_accepts += 1;
            }
            if self.spec.adapt && (t + 1) % TUNE_BATCH == 0 {
                self.scale = tuner.update(batch_accepts as f64 / TUNE_BATCH as f64);
                batch_accepts = 0;
            }
        }
        Ok(())
    }
}

/// Runs the burn-in phase and returns the proposal scale it settles on.
pub fn tune_proposal(spec: &ChainSpec, target_rate: f64) -> Result<f64> {
    let mut chain = Chain::start(spec, None, stream_rng(spec.seed, 0))?;
    chain.burn_in(target_rate)?;
    Ok(chain.scale)
}

/// Single chain on stream 0 of `spec.seed`.
pub fn run_chain(spec: &ChainSpec, init: Option<&PointConfiguration>) -> Result<SampleArchive> {
    run_chain_on_stream(spec, init, 0)
}

fn run_chain_on_stream(spec: &ChainSpec, init: Option<&PointConfiguration>, stream: u64) -> Result<SampleArchive> {
    let mut chain = Chain::start(spec, init, stream_rng(spec.seed, stream))?;
    chain.burn_in(DEFAULT_TARGET_RATE)?;
    let recorded = spec.steps - spec.burn_in;
    let mut snapshots = Vec::with_capacity((recorded / spec.thinning) as usize);
    let mut energy_trace = Vec::with_capacity(snapshots.capacity());
    let mut accepted = 0u64;
    for t in 0..recorded {
        if chain.step()? {
            accepted += 1;
        }
        if (t + 1) % spec.thinning == 0 {
            snapshots.push(chain.config.clone());
            energy_trace.push(chain.energy);
        }
    }
    log::debug!("chain stream {stream}: acceptance {}", accepted as f64 / recorded as f64);
    Ok(SampleArchive {
        snapshots,
        acceptance_rate: accepted as f64 / recorded as f64,
        energy_trace,
        final_proposal_scale: chain.scale,
        spec: spec.echo(),
    })
}

/// Independent chains on streams `0..chains` of the seed, run concurrently.
pub fn run_chains(spec: &ChainSpec, chains: usize) -> Result<Vec<SampleArchive>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|k| run_chain_on_stream(spec, None, k))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ChainEcho,
    acceptance_rate: f64,
    final_proposal_scale: f64,
    energy_trace: Vec<f64>,
}

impl SampleArchive {
    /// Header JSON line, then one CSV block per snapshot, blocks separated by
    /// blank lines.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            spec: self.spec.clone(),
            acceptance_rate: self.acceptance_rate,
            final_proposal_scale: self.final_proposal_scale,
            energy_trace: self.energy_trace.clone(),
        };
        let line = serde_json::to_string(&header).map_err(|e| RieszError::Format(e.to_string()))?;
        writeln!(w, "{line}")?;
        for snap in &self.snapshots {
            writeln!(w)?;
            w.write_all(snap.to_csv().as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes to `path`, gzip-compressed when it ends in `.gz`, through a
    /// temporary file renamed into place.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        if path.extension().is_some_and(|e| e == "gz") {
            let mut enc = GzEncoder::new(&mut buf, Compression::default());
            self.write_to(&mut enc)?;
            enc.finish()?;
        } else {
            self.write_to(&mut buf)?;
        }
        atomic_write(path, &buf)
    }

    /// Parses an archive stream, plain or gzip. The energy trace is checked
    /// against `field` on every hundredth snapshot.
    pub fn read_from<R: Read>(r: R, field: Option<&FieldSpec>) -> Result<Self> {
        let mut raw = Vec::new();
        BufReader::new(r).read_to_end(&mut raw)?;
        let text = if raw.starts_with(&[0x1f, 0x8b]) {
            let mut s = String::new();
            GzDecoder::new(&raw[..]).read_to_string(&mut s)?;
            s
        } else {
            String::from_utf8(raw).map_err(|e| RieszError::Format(e.to_string()))?
        };
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| RieszError::Format("empty archive".into()))?;
        let header: Header = serde_json::from_str(head).map_err(|e| RieszError::Format(e.to_string()))?;
        let rest: Vec<&str> = lines.collect();
        let mut snapshots = Vec::new();
        for block in rest.split(|l| l.trim().is_empty()).filter(|b| !b.is_empty()) {
            snapshots.push(PointConfiguration::from_csv(&block.join("\n"))?);
        }
        if snapshots.len() != header.energy_trace.len() {
            return Err(RieszError::Format(format!(
                "{} snapshots but {} energies",
                snapshots.len(),
                header.energy_trace.len()
            )));
        }
        let archive = SampleArchive {
            snapshots,
            acceptance_rate: header.acceptance_rate,
            energy_trace: header.energy_trace,
            final_proposal_scale: header.final_proposal_scale,
            spec: header.spec,
        };
        let owned;
        let field = match field {
            Some(f) => Some(f),
            None => match archive.spec.domain.to_domain() {
                Some(domain) => {
                    owned = FieldSpec::new(domain, archive.spec.field.clone())?;
                    Some(&owned)
                }
                None => None,
            },
        };
        if let Some(f) = field {
            archive.spot_check(f)?;
        }
        Ok(archive)
    }

    pub fn read(path: &Path, field: Option<&FieldSpec>) -> Result<Self> {
        Self::read_from(fs::File::open(path)?, field)
    }

    /// Recomputes `H_N` on 1% of the snapshots (at least one).
    pub fn spot_check(&self, field: &FieldSpec) -> Result<()> {
        let stride = 100.min(self.snapshots.len().max(1));
        for (k, (snap, e)) in self.snapshots.iter().zip(&self.energy_trace).enumerate().step_by(stride) {
            if snap.points().any(|p| !field.domain.contains(p)) {
                return Err(RieszError::Format(format!("snapshot {k} leaves the domain")));
            }
            let fresh = total_energy(snap, field, &self.spec.params)?;
            if (fresh - e).abs() > 1e-8 * fresh.abs().max(1e-300) {
                return Err(RieszError::Format(format!(
                    "snapshot {k}: recorded energy {e} but recomputed {fresh}"
                )));
            }
        }
        Ok(())
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| RieszError::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
