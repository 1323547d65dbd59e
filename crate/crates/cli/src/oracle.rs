use crate::failure::Failure;
use bidlab_core::oracles::{cv_bne_bid, cv_naive_bid, expected_equilibrium_revenue, rn_equilibrium_bid, StrategyTable};
use bidlab_core::rng::RngStreams;
use bidlab_core::{validate_config, AgentKind, EnvKind, Environment, ExperimentConfig, Family};
use clap::{Args, ValueEnum};
use num_rational::Ratio;
use num_traits::ToPrimitive;
use std::fs;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    Fpsb,
    Spsb,
    Tpsb,
    AllPay,
    AscendingClock,
    EbayProxy,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Fpsb => Family::Fpsb,
            FamilyArg::Spsb => Family::Spsb,
            FamilyArg::Tpsb => Family::Tpsb,
            FamilyArg::AllPay => Family::AllPay,
            FamilyArg::AscendingClock => Family::AscendingClock,
            FamilyArg::EbayProxy => Family::EbayProxy,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum OracleEnv {
    /// Risk-neutral equilibrium with values uniform on [0, high].
    Ipv,
    /// Common-value benchmarks on the default common-value environment.
    Cv,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum CvStrategy {
    /// E[c | v], ignoring the winner's curse.
    Naive,
    /// E[c | v, own signal is the highest], by Monte Carlo.
    Bne,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long)]
    pub n: u32,
    /// Top of the value range (ipv only).
    #[arg(long, default_value_t = 99)]
    pub high: u64,
    #[arg(long, value_enum, default_value = "ipv")]
    pub env: OracleEnv,
    #[arg(long, value_enum, default_value = "bne")]
    pub strategy: CvStrategy,
    /// Monte Carlo draws per value (cv bne only).
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print the expected equilibrium revenue instead of the strategy.
    #[arg(long)]
    pub revenue: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

type Exact = Ratio<i128>;

fn cv_environment(n: u32) -> Result<Environment, Failure> {
    let c = ExperimentConfig::simple(Family::Spsb, EnvKind::Cv, AgentKind::Truthful, n.max(2), 0);
    validate_config(&c).map(|v| v.environment).map_err(|e| Failure::validation(e.to_string()))
}

fn table(args: &OracleArgs) -> Result<String, Failure> {
    let family = Family::from(args.family);
    let bad = |e: bidlab_core::oracles::OracleError| Failure::validation(e.to_string());
    if args.revenue {
        if args.env != OracleEnv::Ipv {
            return Err(Failure::usage("--revenue is only defined for --env ipv"));
        }
        let r = expected_equilibrium_revenue(family, args.n, Exact::from_integer(args.high as i128)).map_err(bad)?;
        return Ok(format!("family,n,high,revenue\n{},{},{},{}\n", family, args.n, args.high, r.to_f64().unwrap()));
    }
    let t = match args.env {
        OracleEnv::Ipv => {
            let high = Exact::from_integer(args.high as i128);
            let mut bids = Vec::new();
            for v in 0..=args.high {
                let b = rn_equilibrium_bid(family, Exact::from_integer(v as i128), args.n, high).map_err(bad)?;
                bids.push(b.to_f64().unwrap());
            }
            StrategyTable { grid: (0..=args.high).map(|v| v as f64).collect(), bids, se: None }
        }
        OracleEnv::Cv => {
            let env = cv_environment(args.n)?;
            let Environment::Cv { common_low, common_high, noise } = env else { unreachable!("cv environment") };
            let values = common_low.0.saturating_sub(noise.0)..=common_high.0 + noise.0;
            let grid: Vec<f64> = values.clone().map(|v| v as f64).collect();
            match args.strategy {
                CvStrategy::Naive => {
                    let (lo, hi, b) = (common_low.0 as f64, common_high.0 as f64, noise.0 as f64);
                    let bids =
                        grid.iter().map(|&v| cv_naive_bid(v, lo, hi, b)).collect::<Result<_, _>>().map_err(bad)?;
                    StrategyTable { grid, bids, se: None }
                }
                CvStrategy::Bne => {
                    let streams = RngStreams::new(args.seed);
                    let (mut bids, mut se) = (Vec::new(), Vec::new());
                    for v in values {
                        let mut rng = streams.stream("oracle", &[v]);
                        let e = cv_bne_bid::<f64, _>(v, args.n as usize, &env, args.samples, &mut rng).map_err(bad)?;
                        bids.push(e.value);
                        se.push(e.se);
                    }
                    StrategyTable { grid, bids, se: Some(se) }
                }
            }
        }
    };
    Ok(t.to_csv())
}

pub fn oracle(args: OracleArgs) -> Result<(), Failure> {
    let csv = table(&args)?;
    match &args.out {
        Some(p) => fs::write(p, csv).map_err(|e| Failure::io(format!("{}: {e}", p.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
