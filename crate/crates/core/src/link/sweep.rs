use rayon::prelude::*;

use super::{Link, LinkConfig, StopRule};
use crate::channel::SnrPoint;
use crate::modem::Modulation;
use crate::{Error, Result};

const FIRST_BATCH: u64 = 4;
const MAX_BATCH: u64 = 256;

/// Aggregated result for one (modulation, SNR) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRecord {
    pub modulation: Modulation,
    pub snr_db: f64,
    pub eb_n0_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub trials: u64,
}

impl BerRecord {
    pub fn ber(&self) -> f64 {
        self.errors as f64 / self.bits as f64
    }

    /// Binomial standard error of the BER estimate.
    pub fn std_error(&self) -> f64 {
        let p = self.ber();
        (p * (1.0 - p) / self.bits as f64).sqrt()
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs trials `0, 1, 2, ...` until the stopping rule fires.
///
/// Trials execute in parallel batches, but counts are folded in trial order
/// and the rule is checked after every trial, so the record depends only on
/// the configuration and never on the worker count.
fn accumulate(link: &Link, snr: SnrPoint, stop: StopRule) -> Result<BerRecord> {
    let cfg = link.config();
    let mut record = BerRecord {
        modulation: cfg.modulation,
        snr_db: snr.snr_db,
        eb_n0_db: cfg.eb_n0_db(snr),
        bits: 0,
        errors: 0,
        trials: 0,
    };
    let mut next = 0u64;
    let mut batch = FIRST_BATCH;
    loop {
        let outcomes: Vec<_> = (next..next + batch).into_par_iter().map(|t| link.run_trial(snr, t)).collect();
        for outcome in outcomes {
            let outcome = outcome?;
            record.bits += outcome.bits;
            record.errors += outcome.errors;
            record.trials += 1;
            if record.errors >= stop.target_errors || record.bits >= stop.max_bits {
                return Ok(record);
            }
        }
        next += batch;
        batch = (batch * 2).min(MAX_BATCH);
    }
}

/// Simulates a single SNR point (which need not lie on the config grid).
pub fn run_point(cfg: &LinkConfig, snr: SnrPoint, threads: Option<usize>) -> Result<BerRecord> {
    let link = Link::new(cfg.clone())?;
    with_pool(threads, || accumulate(&link, snr, cfg.stop))?
}

/// One record per grid point, in grid order, for the configured modulation.
pub fn run_sweep(cfg: &LinkConfig, threads: Option<usize>) -> Result<Vec<BerRecord>> {
    let link = Link::new(cfg.clone())?;
    with_pool(threads, || {
        cfg.snr.points().into_iter().map(|snr| accumulate(&link, SnrPoint::new(snr), cfg.stop)).collect()
    })?
}

/// Sweeps each modulation in turn; records are ordered by (modulation, SNR).
pub fn run_sweeps(cfg: &LinkConfig, modulations: &[Modulation], threads: Option<usize>) -> Result<Vec<BerRecord>> {
    let mut mods = modulations.to_vec();
    mods.sort();
    mods.dedup();
    let mut out = Vec::new();
    for m in mods {
        out.extend(run_sweep(&LinkConfig { modulation: m, ..cfg.clone() }, threads)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::SnrGrid;

    fn quick(modulation: Modulation) -> LinkConfig {
        LinkConfig {
            modulation,
            frame_bits: 128,
            stop: StopRule { target_errors: 50, max_bits: 10_000 },
            ..Default::default()
        }
    }

    #[test]
    fn record_count_follows_grid() {
        let cfg =
            LinkConfig { snr: SnrGrid { start_db: 16.0, stop_db: 20.0, step_db: 1.0 }, ..quick(Modulation::Qpsk) };
        let records = run_sweep(&cfg, Some(2)).unwrap();
        assert_eq!(records.len(), 5);
        assert!(records.windows(2).all(|w| w[0].snr_db < w[1].snr_db));
        for r in &records {
            assert!(r.bits >= 10_000 || r.errors >= 50);
            assert!(r.ber() >= 0.0 && r.ber() <= 1.0);
        }
        let one = LinkConfig { snr: SnrGrid::single(3.0), ..cfg };
        assert_eq!(run_sweep(&one, None).unwrap().len(), 1);
    }

    #[test]
    fn independent_of_thread_count() {
        let cfg =
            LinkConfig { snr: SnrGrid { start_db: -6.0, stop_db: -2.0, step_db: 2.0 }, ..quick(Modulation::Qam16) };
        let a = run_sweep(&cfg, Some(1)).unwrap();
        let b = run_sweep(&cfg, Some(3)).unwrap();
        let c = run_sweep(&cfg, Some(8)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn stops_on_target_errors() {
        let cfg = LinkConfig { snr: SnrGrid::single(-10.0), ..quick(Modulation::Qam64) };
        let r = run_sweep(&cfg, None).unwrap()[0];
        assert!(r.errors >= 50);
        // the last trial pushed it over the threshold
        assert!(r.trials <= 2);
    }

    #[test]
    fn multi_modulation_order() {
        let cfg = LinkConfig { snr: SnrGrid::single(0.0), ..quick(Modulation::Qpsk) };
        let recs = run_sweeps(&cfg, &[Modulation::Qam64, Modulation::Qpsk, Modulation::Qam64], Some(2)).unwrap();
        let mods: Vec<_> = recs.iter().map(|r| r.modulation).collect();
        assert_eq!(mods, vec![Modulation::Qpsk, Modulation::Qam64]);
    }
}
