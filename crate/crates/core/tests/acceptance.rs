//! Acceptance criteria 1-10. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::time::Instant;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use esg_risk::calibration::{calibrate_gamma2, estimate_dynamics, CorrelationConvention, HistoricalSeries, IndifferenceSpec};
use esg_risk::portfolio::{minimize_risk, portfolio_risk, project_feasible, run_backtest, BacktestConfig, FeasibleSet, Objective, OptConfig, Strategy};
use esg_risk::risk::{entropic_closed_form, esg_risk_premium, financial_shortfall_risk, indifference_gap, shift_curve, shortfall_risk, RiskConfig};
use esg_risk::scenarios::{rescale_rating, sample_basket, sample_single, AssetDynamics, BasketDynamics, Position, ScenarioSet};
use esg_risk::utility::{MultiUtility, ScalarUtility};

type Outcome = Result<String, String>;

const TOL: f64 = 1e-10;

fn random_dynamics(rng: &mut ChaCha8Rng) -> AssetDynamics {
    AssetDynamics {
        mu_x: rng.random_range(-0.1..0.2),
        sigma_x: rng.random_range(0.1..0.6),
        mu_s: rng.random_range(-0.3..0.3),
        sigma_s: rng.random_range(0.05..0.8),
        rho: rng.random_range(-0.8..0.8),
        p: rng.random_range(0.05..0.95),
        s0_rescaled: rescale_rating(rng.random_range(0.1..0.9)).unwrap(),
        notional: 1.0,
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn value(r: esg_risk::Result<esg_risk::risk::RiskResult>) -> Result<f64, String> {
    let r = r.map_err(|e| e.to_string())?;
    r.value.finite().ok_or_else(|| format!("risk is {}", r.value))
}

/// Invert the scaled exponential: the rating with `u2(s) = target`.
fn u2_inverse(gamma: f64, c: f64, s0: f64, target: f64) -> f64 {
    s0 - (-(gamma * target / c)).ln_1p() / gamma
}

fn criterion_1() -> Outcome {
    let u = MultiUtility::reference();
    let u2 = |s: f64| u.u2.eval(s).unwrap().value();
    let (a, b) = (u2(0.0), u2(1.0));
    check((a + 0.0755).abs() <= 5e-4, || format!("u2(0) = {a}"))?;
    check((b - 0.0347).abs() <= 5e-4, || format!("u2(1) = {b}"))?;
    check((1.0 + u.k * a - 0.9245).abs() <= 5e-4, || format!("1+k u2(0) = {}", 1.0 + a))?;
    check((1.0 + u.k * b - 1.0347).abs() <= 5e-4, || format!("1+k u2(1) = {}", 1.0 + b))?;
    Ok(format!("u2(0) = {a:.5}, u2(1) = {b:.5}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = random_dynamics(&mut rng);
        let gamma = rng.random_range(0.5..3.0);
        let set = sample_single(&d, 1.0 / 12.0, 10_000, 100 + i).map_err(|e| e.to_string())?;
        let mc = value(financial_shortfall_risk(&ScalarUtility::exponential(gamma).unwrap(), set.position(0), &RiskConfig::default()))?;
        let cf = entropic_closed_form(gamma, set.position(0)).map_err(|e| e.to_string())?;
        worst = worst.max((mc - cf).abs());
    }
    check(worst <= 1e-8, || format!("max |MC - closed form| = {worst:e}"))?;
    Ok(format!("max deviation {worst:.2e} over 20 dynamics"))
}

fn random_monotone_utility(rng: &mut ChaCha8Rng) -> MultiUtility {
    let g1 = rng.random_range(0.2..3.0);
    let g2 = rng.random_range(0.1..3.0);
    let c = rng.random_range(0.01..0.3);
    let s0 = rng.random_range(0.2..0.8);
    let k = rng.random_range(0.0..1.5);
    MultiUtility::entropic(g1, g2, c, s0, k, true).unwrap()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = RiskConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let u = random_monotone_utility(&mut rng);
        let d = random_dynamics(&mut rng);
        let eta = rng.random_range(-5.0..5.0);
        let set = sample_single(&d, 1.0 / 12.0, 2_000, 300 + i).map_err(|e| e.to_string())?;
        let p = set.position(0);
        let shifted: Vec<f64> = p.x.iter().map(|x| x + eta).collect();
        let r = value(shortfall_risk(&u, p, &cfg))?;
        let r_eta = value(shortfall_risk(&u, Position::new(&shifted, p.s).unwrap(), &cfg))?;
        worst = worst.max((r_eta - (r - eta)).abs());
    }
    check(worst < 2.0 * TOL, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |rho[X+eta,S] - (rho - eta)| = {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = RiskConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let d = random_dynamics(&mut rng);
        let threshold = rng.random_range(0.1..0.9);
        let eta = rng.random_range(0.01..3.0);
        let set = sample_single(&d, 1.0 / 12.0, 5_000, 400 + i).map_err(|e| e.to_string())?;
        let p = set.position(0);
        let u = MultiUtility::new(ScalarUtility::Linear, ScalarUtility::step(threshold, eta).unwrap(), 0.0, false).unwrap();
        let rho = value(shortfall_risk(&u, p, &cfg))?;
        let rho_hat = value(financial_shortfall_risk(&ScalarUtility::Linear, p, &cfg))?;
        let prob = p.s.iter().filter(|&&s| s < threshold).count() as f64 / p.len() as f64;
        worst = worst.max((rho - (rho_hat + eta * prob)).abs());
    }
    check(worst < 2.0 * TOL, || format!("max deviation {worst:e}"))?;
    Ok(format!("max |rho - (rho_hat + eta P[S<s])| = {worst:.2e} (linear u1)"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = RiskConfig::default();
    let mut mono_worst = f64::NEG_INFINITY;
    for i in 0..200 {
        let u = random_monotone_utility(&mut rng);
        let set = sample_single(&random_dynamics(&mut rng), 1.0 / 12.0, 1_000, 500 + i).map_err(|e| e.to_string())?;
        let p = set.position(0);
        let (dx, ds) = (rng.random_range(0.0..0.05), rng.random_range(0.0..0.2));
        let x: Vec<f64> = p.x.iter().map(|x| x - dx * rng.random::<f64>()).collect();
        let s: Vec<f64> = p.s.iter().map(|s| (s - ds * rng.random::<f64>()).max(0.0)).collect();
        let better = value(shortfall_risk(&u, p, &cfg))?;
        let worse = shortfall_risk(&u, Position::new(&x, &s).unwrap(), &cfg).map_err(|e| e.to_string())?.value;
        if worse.is_pos_inf() {
            continue;
        }
        // dominated position must not be cheaper
        mono_worst = mono_worst.max(better - worse.value());
    }
    check(mono_worst <= 2.0 * TOL, || format!("dominated position cheaper by {mono_worst:e}"))?;

    let mut conv_worst = f64::NEG_INFINITY;
    for i in 0..200 {
        let g1 = rng.random_range(0.2..3.0);
        let u = MultiUtility::entropic(g1, rng.random_range(0.1..3.0), rng.random_range(0.01..0.3), 0.5, 0.0, false).unwrap();
        let a = sample_single(&random_dynamics(&mut rng), 1.0 / 12.0, 1_000, 700 + i).map_err(|e| e.to_string())?;
        let b = sample_single(&random_dynamics(&mut rng), 1.0 / 12.0, 1_000, 900 + i).map_err(|e| e.to_string())?;
        let (pa, pb) = (a.position(0), b.position(0));
        let lambda: f64 = rng.random();
        let x: Vec<f64> = pa.x.iter().zip(pb.x).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect();
        let s: Vec<f64> = pa.s.iter().zip(pb.s).map(|(p, q)| lambda * p + (1.0 - lambda) * q).collect();
        let mix = value(shortfall_risk(&u, Position::new(&x, &s).unwrap(), &cfg))?;
        let ra = value(shortfall_risk(&u, pa, &cfg))?;
        let rb = value(shortfall_risk(&u, pb, &cfg))?;
        conv_worst = conv_worst.max(mix - (lambda * ra + (1.0 - lambda) * rb));
    }
    check(conv_worst <= 4.0 * TOL, || format!("convexity violated by {conv_worst:e}"))?;
    Ok(format!(
        "monotonicity slack {mono_worst:.2e}, convexity slack {conv_worst:.2e} (200 cases each)"
    ))
}

/// Every `x` paired with every `s`: the empirical measure is a product.
fn product_grid(x: &[f64], s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gx = Vec::with_capacity(x.len() * s.len());
    let mut gs = Vec::with_capacity(x.len() * s.len());
    for &a in x {
        for &b in s {
            gx.push(a);
            gs.push(b);
        }
    }
    (gx, gs)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = RiskConfig::default();
    let (g2, c, s0) = (0.75, 0.1, 0.5982);
    let mut worst_zero: f64 = 0.0;
    let mut sign_checks = 0;
    for i in 0..20 {
        let d = random_dynamics(&mut rng);
        let set = sample_single(&d, 1.0 / 12.0, 200, 600 + i).map_err(|e| e.to_string())?;
        let x = set.position(0).x.to_vec();

        // Two-point rating law with E[u2(S)] = 0 exactly: n_low at s_low, the rest at s_high.
        let u2 = ScalarUtility::scaled_exponential(g2, c, s0).unwrap();
        let s_low = rng.random_range(0.05..s0 - 0.05);
        let n_low = rng.random_range(1..20usize);
        let n_high = 20 - n_low + 1;
        let target = -(n_low as f64) * u2.value(s_low).value() / n_high as f64;
        let s_high = u2_inverse(g2, c, s0, target);
        if !(s_high > s0 && s_high <= 1.0) {
            continue;
        }
        let s: Vec<f64> = std::iter::repeat_n(s_low, n_low).chain(std::iter::repeat_n(s_high, n_high)).collect();
        let gap = indifference_gap(&u2, Position::new(&s, &s).unwrap()).unwrap();

        for k in [0.0, 1.0] {
            let u = MultiUtility::entropic(1.0, g2, c, s0, k, false).unwrap();
            let (gx, gs) = if k == 0.0 {
                // any coupling works for k = 0; cycle S so its marginal stays exact
                let full = (x.len() / s.len()) * s.len();
                (x[..full].to_vec(), (0..full).map(|j| s[j % s.len()]).collect())
            } else {
                product_grid(&x, &s)
            };
            let pos = Position::new(&gx, &gs).unwrap();
            let p = esg_risk_premium(&u, pos, &cfg).map_err(|e| e.to_string())?;
            let prem = p.premium.finite().ok_or("infinite premium")?;
            worst_zero = worst_zero.max(prem.abs());
        }
        check(gap.abs() < 1e-15, || format!("constructed gap {gap:e}"))?;

        // Random (non-indifferent) rating law, independent of X: sign check.
        let s_rand: Vec<f64> = sample_single(&random_dynamics(&mut rng), 1.0 / 12.0, 30, 800 + i)
            .map_err(|e| e.to_string())?
            .position(0)
            .s
            .to_vec();
        let (gx, gs) = product_grid(&x, &s_rand);
        let pos = Position::new(&gx, &gs).unwrap();
        let e_u2 = indifference_gap(&u2, pos).unwrap();
        let p = esg_risk_premium(&MultiUtility::entropic(1.0, g2, c, s0, 1.0, false).unwrap(), pos, &cfg)
            .map_err(|e| e.to_string())?;
        let prem = p.premium.finite().ok_or("infinite premium")?;
        if e_u2.abs() > 1e-6 {
            check(prem.signum() == (-e_u2).signum(), || format!("premium {prem} vs E[u2] {e_u2}"))?;
            sign_checks += 1;
        }
    }
    check(worst_zero < 4.0 * TOL, || format!("max |premium| at indifference {worst_zero:e}"))?;
    check(sign_checks >= 10, || format!("only {sign_checks} sign checks ran"))?;
    Ok(format!("max |premium| at indifference {worst_zero:.2e}; {sign_checks} sign checks"))
}

fn criterion_7() -> Outcome {
    // gamma2 round trip
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s0 = 0.5982;
    let mut worst_rel: f64 = 0.0;
    for i in 0..100 {
        let g = 0.1 * (100f64).powf(i as f64 / 99.0);
        let spec = IndifferenceSpec::for_gamma2(g, s0, s0 - rng.random_range(0.05..0.5), s0 + rng.random_range(0.05..0.4)).unwrap();
        let back = calibrate_gamma2(&spec, s0).map_err(|e| e.to_string())?;
        worst_rel = worst_rel.max((back - g).abs() / g);
    }
    check(worst_rel <= 1e-6, || format!("gamma2 relative error {worst_rel:e}"))?;

    // dynamics round trip: 40 monthly observations, 39 returns
    let truth = AssetDynamics {
        mu_x: 0.062,
        sigma_x: 0.306,
        mu_s: 0.05,
        sigma_s: 0.3,
        rho: 0.3,
        p: 0.5,
        s0_rescaled: rescale_rating(0.5982).unwrap(),
        notional: 1.0,
    };
    let basket = BasketDynamics::independent(vec![truth]).unwrap();
    let start = NaiveDate::from_ymd_opt(2021, 10, 1).unwrap();
    let n = 39.0f64;
    let names = ["mu_x", "sigma_x", "p", "mu_s", "sigma_s", "rho"];
    let mut zs: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut exceed = Vec::new();
    for seed in 0..50u64 {
        let h = HistoricalSeries::simulate(&basket, vec!["A".into()], start, 40, seed).map_err(|e| e.to_string())?;
        let est = estimate_dynamics(&h, 0, CorrelationConvention::Conditional).map_err(|e| e.to_string())?;
        let e = est.dynamics;
        let nc = est.change_months as f64;
        let twelve = 12f64.sqrt();
        let z = [
            (e.mu_x - truth.mu_x) / (twelve * truth.sigma_x / n.sqrt()),
            (e.sigma_x - truth.sigma_x) / (truth.sigma_x / (2.0 * (n - 1.0)).sqrt()),
            (e.p - truth.p) / (truth.p * (1.0 - truth.p) / n).sqrt(),
            (e.mu_s - truth.mu_s) / (twelve * truth.sigma_s / nc.sqrt()),
            (e.sigma_s - truth.sigma_s) / (truth.sigma_s / (2.0 * (nc - 1.0)).sqrt()),
            (e.rho - truth.rho) / ((1.0 - truth.rho * truth.rho) / (nc - 3.0).sqrt()),
        ];
        for (j, zi) in z.into_iter().enumerate() {
            zs[j].push(zi);
            if !(zi.abs() <= 3.0) {
                exceed.push(format!("seed {seed} {} z={zi:.2}", names[j]));
            }
        }
    }
    // mean and spread of the z-scores per parameter, as a bias diagnostic
    let summary: Vec<String> = names
        .iter()
        .zip(&zs)
        .map(|(name, z)| {
            let m = z.iter().sum::<f64>() / z.len() as f64;
            let sd = (z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (z.len() - 1) as f64).sqrt();
            format!("{name} {m:+.2}/{sd:.2}")
        })
        .collect();
    check(exceed.is_empty(), || {
        format!(
            "{} of 300 estimates outside 3 SE: {}; z mean/sd: {}",
            exceed.len(),
            exceed.join(", "),
            summary.join(", ")
        )
    })?;
    Ok(format!(
        "gamma2 rel. error {worst_rel:.1e}; 300 estimates within 3 SE; z mean/sd: {}",
        summary.join(", ")
    ))
}

fn grid_search(obj: &Objective, scen: &ScenarioSet, fs: &FeasibleSet) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..=100usize {
        for b in 0..=(100 - a) {
            let w = [a as f64 / 100.0, b as f64 / 100.0, (100 - a - b) as f64 / 100.0];
            if !fs.contains(&w) {
                continue;
            }
            let r = portfolio_risk(obj, scen, &w, &RiskConfig::default()).unwrap().value();
            best = best.min(r);
        }
    }
    best
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // projection against active-set enumeration
    let mut worst_proj: f64 = 0.0;
    for _ in 0..300 {
        let n = rng.random_range(2..=6usize);
        let cap = rng.random_range(1.0 / n as f64..1.0);
        let fs = FeasibleSet::new(n, 0.0, cap).unwrap();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.5)).collect();
        let w = project_feasible(&v, &fs).map_err(|e| e.to_string())?;
        let oracle = enumerate_projection(&v, &fs);
        let d = w.as_slice().iter().zip(&oracle).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst_proj = worst_proj.max(d);
    }
    check(worst_proj <= 1e-6, || format!("projection distance {worst_proj:e}"))?;

    let mut worst_opt: f64 = 0.0;
    for i in 0..4 {
        let assets: Vec<AssetDynamics> = (0..3).map(|_| random_dynamics(&mut rng)).collect();
        let scen = sample_basket(&BasketDynamics::independent(assets).unwrap(), 1.0 / 12.0, 2_000, 80 + i).map_err(|e| e.to_string())?;
        let fs = FeasibleSet::new(3, 0.0, rng.random_range(0.4..1.0)).unwrap();
        let u = MultiUtility::entropic(rng.random_range(0.5..3.0), 0.75, 0.1, 0.5982, 0.0, false).unwrap();
        let obj = if i % 2 == 0 { Objective::Esg(u) } else { Objective::Financial(u.u1) };
        let r = minimize_risk(&obj, &scen, &fs, &OptConfig::default()).map_err(|e| e.to_string())?;
        let g = grid_search(&obj, &scen, &fs);
        worst_opt = worst_opt.max((r.risk - g).abs());
    }
    check(worst_opt <= 1e-4, || format!("optimizer vs grid {worst_opt:e}"))?;
    Ok(format!("projection distance {worst_proj:.1e}; optimizer vs grid {worst_opt:.1e}"))
}

fn enumerate_projection(v: &[f64], fs: &FeasibleSet) -> Vec<f64> {
    let n = v.len();
    let mut best = (f64::INFINITY, vec![]);
    for code in 0..3usize.pow(n as u32) {
        let state: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let fixed: f64 = state.iter().map(|&s| [fs.lower, fs.upper, 0.0][s]).sum();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let lambda = if free.is_empty() {
            if (fixed - fs.budget).abs() > 1e-12 {
                continue;
            }
            0.0
        } else {
            (free.iter().map(|&i| v[i]).sum::<f64>() - (fs.budget - fixed)) / free.len() as f64
        };
        let w: Vec<f64> = (0..n).map(|i| [fs.lower, fs.upper, v[i] - lambda][state[i]]).collect();
        if w.iter().any(|&x| x < fs.lower - 1e-12 || x > fs.upper + 1e-12) {
            continue;
        }
        let d: f64 = w.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
        if d < best.0 {
            best = (d, w);
        }
    }
    best.1
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = RiskConfig::default();
    let grid: Vec<f64> = (0..=40).map(|i| -1.0 + i as f64 / 20.0).collect();
    let mut details = Vec::new();
    for seed in 0..5u64 {
        let d = random_dynamics(&mut rng);
        let set = sample_single(&d, 1.0 / 12.0, 10_000, 900 + seed).map_err(|e| e.to_string())?;
        let p = set.position(0);
        let u = MultiUtility::reference();
        let curve = shift_curve(&u, p, &grid, &cfg).map_err(|e| e.to_string())?;
        let zeros = vec![0.0; p.len()];
        let ones = vec![1.0; p.len()];
        let at0 = value(shortfall_risk(&u, Position::new(p.x, &zeros).unwrap(), &cfg))?;
        let at1 = value(shortfall_risk(&u, Position::new(p.x, &ones).unwrap(), &cfg))?;
        let first = curve[0].rho.value();
        let last = curve[curve.len() - 1].rho.value();
        check((first - at0).abs() <= 2.0 * TOL, || format!("rho(-1) = {first} vs rho[X,0] = {at0}"))?;
        check((last - at1).abs() <= 2.0 * TOL, || format!("rho(+1) = {last} vs rho[X,1] = {at1}"))?;
        let range = |c: &[esg_risk::risk::ShiftPoint]| {
            let v: Vec<f64> = c.iter().map(|q| q.rho.value()).collect();
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
        };
        let small = MultiUtility::entropic(1.0, 0.75, 0.05, 0.5982, 1.0, false).unwrap();
        let small_curve = shift_curve(&small, p, &grid, &cfg).map_err(|e| e.to_string())?;
        let (r1, r2) = (range(&curve), range(&small_curve));
        check(r2 < r1, || format!("c=0.05 range {r2} not below c=0.1 range {r1}"))?;
        details.push(format!("{r2:.4}<{r1:.4}"));
    }
    Ok(format!("endpoints match; ranges c=0.05 vs 0.1: {}", details.join(", ")))
}

fn criterion_10() -> Outcome {
    let started = Instant::now();
    let n = 11;
    let assets: Vec<AssetDynamics> = (0..n)
        .map(|i| {
            let rating = 0.15 + 0.7 * i as f64 / (n - 1) as f64;
            AssetDynamics {
                mu_x: 0.10 - 0.04 * rating,
                sigma_x: 0.25,
                mu_s: 0.0,
                sigma_s: 0.2,
                rho: 0.1,
                p: 0.3,
                s0_rescaled: rescale_rating(rating).unwrap(),
                notional: 1.0,
            }
        })
        .collect();
    let basket = BasketDynamics::independent(assets).unwrap();
    let tickers = (0..n).map(|i| format!("A{i:02}")).collect();
    let h = HistoricalSeries::simulate(&basket, tickers, NaiveDate::from_ymd_opt(2021, 10, 1).unwrap(), 41, 10)
        .map_err(|e| e.to_string())?;
    let cfg = BacktestConfig {
        seed: 10,
        ..BacktestConfig::default()
    };
    let ledger = run_backtest(&h, &cfg).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();
    let rebalances = ledger.rows_for(Strategy::Equal).count();
    check(rebalances == 20, || format!("{rebalances} rebalances"))?;
    for st in [Strategy::Entropic, Strategy::Esg, Strategy::Equal] {
        let mut cum = 0.0;
        for r in ledger.rows_for(st) {
            cum += r.log_return;
            check(r.cum_log_return == cum, || format!("{st} ledger does not telescope at {}", r.date))?;
        }
    }
    let esg = ledger.mean_rating(Strategy::Esg).unwrap();
    let classical = ledger.mean_rating(Strategy::Entropic).unwrap();
    check(esg > classical, || format!("ESG mean rating {esg} not above classical {classical}"))?;
    check(elapsed < 300.0, || format!("backtest took {elapsed:.1} s"))?;
    Ok(format!(
        "mean rating esg {esg:.4} > entropic {classical:.4}; 20 rebalances x 3 strategies in {elapsed:.1} s"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("utility anchors", criterion_1),
        ("closed-form oracle", criterion_2),
        ("translation invariance", criterion_3),
        ("penalty identity", criterion_4),
        ("monotonicity and convexity", criterion_5),
        ("indifference and premium sign", criterion_6),
        ("calibration round trips", criterion_7),
        ("projection and optimizer oracles", criterion_8),
        ("shift-curve shape", criterion_9),
        ("backtest direction", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.1} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
