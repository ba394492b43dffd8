//! Slot-level Monte-Carlo simulation of a PFS cell.
//!
//! Every slot draws Rayleigh fading for each link, normalizes each terminal's
//! SINR (or achievable efficiency) by its sliding-window mean, hands every RB
//! to the largest normalized value and credits the payload of the chosen MCS.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::mcs::McsTable;
use crate::sinr::LinkProfile;

/// Time behaviour of the fading processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Fading {
    /// Fresh unit-mean exponential power gains every slot.
    Iid,
    /// First-order Gauss-Markov complex gain with correlation `1 - doppler_norm`
    /// between consecutive slots. `doppler_norm = 0` freezes the channel.
    GaussMarkov { doppler_norm: f64 },
}

impl Fading {
    /// Gauss-Markov fading from the slot-to-slot correlation `rho` of the complex gain.
    pub fn gauss_markov_rho(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Validation(format!(
                "correlation {rho} must lie in (0, 1]"
            )));
        }
        Ok(Fading::GaussMarkov {
            doppler_norm: 1.0 - rho,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PfsMetric {
    /// Normalize the SINR by its windowed mean.
    SinrBased,
    /// Normalize the achievable efficiency `C(Z)` by its windowed mean.
    RateBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum McsRule {
    /// Each RB uses the MCS of its own SINR.
    Relaxed,
    /// All RBs of a terminal use the MCS of the smallest SINR among them.
    Unique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub slots: usize,
    pub window: usize,
    pub seed: u64,
    pub fading: Fading,
    pub pfs_metric: PfsMetric,
    pub mcs_rule: McsRule,
    /// Slots left out of every average; `None` means one window.
    pub warmup: Option<usize>,
    /// Use one fading draw per link for all RBs instead of independent draws.
    pub shared_fading: bool,
    /// Keep up to this many unconditional SINR samples per terminal and RB.
    pub capture_samples: usize,
}

impl SimConfig {
    pub fn new(slots: usize, window: usize, seed: u64) -> Self {
        Self {
            slots,
            window,
            seed,
            fading: Fading::Iid,
            pfs_metric: PfsMetric::SinrBased,
            mcs_rule: McsRule::Relaxed,
            warmup: None,
            shared_fading: false,
            capture_samples: 0,
        }
    }

    pub fn with_fading(mut self, fading: Fading) -> Self {
        self.fading = fading;
        self
    }

    pub fn with_metric(mut self, metric: PfsMetric) -> Self {
        self.pfs_metric = metric;
        self
    }

    pub fn with_mcs_rule(mut self, rule: McsRule) -> Self {
        self.mcs_rule = rule;
        self
    }

    pub fn with_warmup(mut self, warmup: usize) -> Self {
        self.warmup = Some(warmup);
        self
    }

    pub fn with_shared_fading(mut self, shared: bool) -> Self {
        self.shared_fading = shared;
        self
    }

    pub fn with_samples(mut self, per_link: usize) -> Self {
        self.capture_samples = per_link;
        self
    }

    pub fn warmup_slots(&self) -> usize {
        self.warmup.unwrap_or(self.window)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Validation("window must be at least one slot".into()));
        }
        if self.slots <= self.window {
            return Err(Error::Validation(format!(
                "slots ({}) must exceed the window ({})",
                self.slots, self.window
            )));
        }
        if self.warmup_slots() >= self.slots {
            return Err(Error::Validation(
                "warmup must be shorter than the run".into(),
            ));
        }
        if let Fading::GaussMarkov { doppler_norm } = self.fading {
            if !(0.0..1.0).contains(&doppler_norm) {
                return Err(Error::Validation(format!(
                    "doppler_norm {doppler_norm} must lie in [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Average throughput per terminal (bit/s).
    pub throughput: Vec<f64>,
    /// `frequency[j][n]`: share of measured slots in which `j` won RB `n`.
    pub frequency: Vec<Vec<f64>>,
    /// Mean SINR over the RBs a terminal won; `None` if it never won one.
    pub scheduled_sinr_mean: Vec<Option<f64>>,
    /// Mean SINR over every RB and slot.
    pub unconditional_sinr_mean: Vec<f64>,
    /// `samples[j][n]`: the first captured SINR values of terminal `j` on RB `n`.
    pub samples: Vec<Vec<Vec<f64>>>,
    pub measured_slots: usize,
}

impl SimResult {
    pub fn terminals(&self) -> usize {
        self.throughput.len()
    }
}

/// Fading generator for one link: a power gain per station.
struct LinkFading {
    /// Complex gains (re, im) with unit mean power; only used by Gauss-Markov.
    gains: Vec<(f64, f64)>,
    power: Vec<f64>,
}

impl LinkFading {
    fn new(stations: usize) -> Self {
        Self {
            gains: vec![(0.0, 0.0); stations],
            power: vec![0.0; stations],
        }
    }

    fn init(&mut self, fading: Fading, rng: &mut ChaCha8Rng) {
        match fading {
            Fading::Iid => self.step(fading, rng),
            Fading::GaussMarkov { .. } => {
                for (g, p) in self.gains.iter_mut().zip(&mut self.power) {
                    *g = complex_gaussian(rng);
                    *p = g.0 * g.0 + g.1 * g.1;
                }
            }
        }
    }

    fn step(&mut self, fading: Fading, rng: &mut ChaCha8Rng) {
        match fading {
            Fading::Iid => {
                for p in &mut self.power {
                    *p = rng.sample(Exp1);
                }
            }
            Fading::GaussMarkov { doppler_norm } => {
                let rho = 1.0 - doppler_norm;
                let innovation = (1.0 - rho * rho).sqrt();
                for (g, p) in self.gains.iter_mut().zip(&mut self.power) {
                    let w = complex_gaussian(rng);
                    *g = (rho * g.0 + innovation * w.0, rho * g.1 + innovation * w.1);
                    *p = g.0 * g.0 + g.1 * g.1;
                }
            }
        }
    }
}

/// Circularly symmetric complex Gaussian with `E|h|² = 1`.
fn complex_gaussian(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (
        re * std::f64::consts::FRAC_1_SQRT_2,
        im * std::f64::consts::FRAC_1_SQRT_2,
    )
}

fn sinr(link: &LinkProfile, power: &[f64]) -> f64 {
    let interference: f64 = link
        .interferer_powers
        .iter()
        .zip(&power[1..])
        .map(|(p, x)| p * x)
        .sum();
    link.p0 * power[0] / (interference + link.n0)
}

/// Sliding mean over the last `W` slots, excluding the current one.
struct Window {
    values: Vec<f64>,
    next: usize,
    filled: usize,
    sum: f64,
}

impl Window {
    fn new(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
            next: 0,
            filled: 0,
            sum: 0.0,
        }
    }

    /// Mean of the history, or `current` when there is none yet.
    fn mean_or(&self, current: f64) -> f64 {
        if self.filled == 0 {
            current
        } else {
            self.sum / self.filled as f64
        }
    }

    fn push(&mut self, v: f64) {
        let len = self.values.len();
        if self.filled == len {
            self.sum -= self.values[self.next];
        } else {
            self.filled += 1;
        }
        self.values[self.next] = v;
        self.next = (self.next + 1) % len;
        if self.next == 0 {
            // Resum once per lap so rounding from the running updates cannot drift.
            self.sum = self.values[..self.filled].iter().sum();
        } else {
            self.sum += v;
        }
    }
}

fn check_links(links: &[Vec<LinkProfile>], shared: bool) -> Result<usize> {
    let first = links
        .first()
        .ok_or_else(|| Error::Validation("need at least one terminal".into()))?;
    let n_rb = first.len();
    if n_rb == 0 {
        return Err(Error::Validation("need at least one RB".into()));
    }
    for (j, row) in links.iter().enumerate() {
        if row.len() != n_rb {
            return Err(Error::Validation(format!(
                "terminal {j} has {} RBs, expected {n_rb}",
                row.len()
            )));
        }
        for link in row {
            link.validate()?;
            if shared && link.interferer_powers.len() != row[0].interferer_powers.len() {
                return Err(Error::Validation(format!(
                    "shared fading needs the same interferers on every RB (terminal {j})"
                )));
            }
        }
    }
    Ok(n_rb)
}

/// Runs the PFS simulation; `links[j][n]` describes terminal `j` on RB `n`.
pub fn run_pfs(
    links: &[Vec<LinkProfile>],
    table: &McsTable,
    frame: &Frame,
    cfg: &SimConfig,
) -> Result<SimResult> {
    cfg.validate()?;
    frame.validate()?;
    let n_rb = check_links(links, cfg.shared_fading)?;
    if n_rb != frame.n_rb {
        return Err(Error::Validation(format!(
            "links cover {n_rb} RBs, frame has {}",
            frame.n_rb
        )));
    }
    let terminals = links.len();
    let warmup = cfg.warmup_slots();
    let measured = cfg.slots - warmup;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // One generator per link, or per terminal when fading is shared by all RBs.
    let mut fading: Vec<Vec<LinkFading>> = links
        .iter()
        .map(|row| {
            let count = if cfg.shared_fading { 1 } else { n_rb };
            (0..count)
                .map(|n| LinkFading::new(row[n].interferer_powers.len() + 1))
                .collect()
        })
        .collect();
    for gen in fading.iter_mut().flatten() {
        gen.init(cfg.fading, &mut rng);
    }

    let mut windows: Vec<Vec<Window>> = (0..terminals)
        .map(|_| (0..n_rb).map(|_| Window::new(cfg.window)).collect())
        .collect();
    let rate_floor = table.min_efficiency() * 1e-6;
    let symbols = table.symbols_per_rb();

    let mut z = vec![vec![0.0; n_rb]; terminals];
    let mut winner = vec![0usize; n_rb];
    let mut bits = vec![0.0; terminals];
    let mut wins = vec![vec![0u64; n_rb]; terminals];
    let mut sched_sum = vec![0.0; terminals];
    let mut sched_count = vec![0u64; terminals];
    let mut uncond_sum = vec![0.0; terminals];
    let mut samples: Vec<Vec<Vec<f64>>> = (0..terminals)
        .map(|_| {
            (0..n_rb)
                .map(|_| Vec::with_capacity(cfg.capture_samples.min(measured)))
                .collect()
        })
        .collect();

    for t in 0..cfg.slots {
        if t > 0 {
            for gen in fading.iter_mut().flatten() {
                gen.step(cfg.fading, &mut rng);
            }
        }
        for j in 0..terminals {
            for n in 0..n_rb {
                let gen = &fading[j][if cfg.shared_fading { 0 } else { n }];
                let v = sinr(&links[j][n], &gen.power);
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "SINR of terminal {j} on RB {n} at slot {t}"
                    )));
                }
                z[j][n] = v;
            }
        }

        for n in 0..n_rb {
            let mut best = f64::NEG_INFINITY;
            for j in 0..terminals {
                let value = match cfg.pfs_metric {
                    PfsMetric::SinrBased => z[j][n],
                    PfsMetric::RateBased => table.efficiency_at(z[j][n]),
                };
                let mut mean = windows[j][n].mean_or(value);
                if cfg.pfs_metric == PfsMetric::RateBased && mean <= 0.0 {
                    mean = rate_floor;
                }
                let metric = value / mean;
                if metric > best {
                    best = metric;
                    winner[n] = j;
                }
                windows[j][n].push(value);
            }
        }

        if t < warmup {
            continue;
        }
        for n in 0..n_rb {
            let j = winner[n];
            wins[j][n] += 1;
            sched_sum[j] += z[j][n];
            sched_count[j] += 1;
            if cfg.mcs_rule == McsRule::Relaxed {
                bits[j] += symbols * table.efficiency_at(z[j][n]);
            }
        }
        if cfg.mcs_rule == McsRule::Unique {
            for j in 0..terminals {
                let mut won = 0usize;
                let mut min_z = f64::INFINITY;
                for n in (0..n_rb).filter(|&n| winner[n] == j) {
                    won += 1;
                    min_z = min_z.min(z[j][n]);
                }
                if won > 0 {
                    bits[j] += won as f64 * symbols * table.efficiency_at(min_z);
                }
            }
        }
        for j in 0..terminals {
            for n in 0..n_rb {
                uncond_sum[j] += z[j][n];
                if samples[j][n].len() < cfg.capture_samples {
                    samples[j][n].push(z[j][n]);
                }
            }
        }
    }

    let duration = measured as f64 * frame.t_tti;
    Ok(SimResult {
        throughput: bits.iter().map(|b| b / duration).collect(),
        frequency: wins
            .iter()
            .map(|row| row.iter().map(|&w| w as f64 / measured as f64).collect())
            .collect(),
        scheduled_sinr_mean: sched_sum
            .iter()
            .zip(&sched_count)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect(),
        unconditional_sinr_mean: uncond_sum
            .iter()
            .map(|s| s / (measured * n_rb) as f64)
            .collect(),
        samples,
        measured_slots: measured,
    })
}

/// Mean scheduled SINR over mean unconditional SINR; `None` for terminals never scheduled.
pub fn empirical_sinr_gain(result: &SimResult) -> Vec<Option<f64>> {
    result
        .scheduled_sinr_mean
        .iter()
        .zip(&result.unconditional_sinr_mean)
        .map(|(s, &u)| s.map(|s| s / u))
        .collect()
}

/// `|model - sim| / sim` in percent; `None` when the simulated rate is not positive.
pub fn relative_error(model_rate: f64, sim_rate: f64) -> Option<f64> {
    (sim_rate > 0.0 && sim_rate.is_finite())
        .then(|| (model_rate - sim_rate).abs() / sim_rate * 100.0)
}

/// Kolmogorov-Smirnov statistic of `samples` against the CDF `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Critical KS distance at significance 0.01 for `n` samples.
pub fn ks_critical_01(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}
