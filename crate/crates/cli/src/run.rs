//! Flag resolution and dispatch into the library.

use crate::output::{config_err, csv_preamble, CliError, Prepared, Report, SCHEMA_VERSION};
use crate::presets::{self, Alphas, Curve, Design, Family, Scenario};
use crate::{BoundArgs, ConstellationArgs, OptimizeArgs, SimulateArgs, SpectrumArgs};
use hqbicm::bounds::{
    alpha_sweep, bound_sweep, union_bound_terms, write_bound_csv, BoundPoint, Channel,
    SaddleTerms, SpectrumTable, VALIDITY_THRESHOLD,
};
use hqbicm::constellation::{validate_region, Constellation, ConstellationDump};
use hqbicm::convcode::{ConvCode, Trellis};
use hqbicm::montecarlo::{parse_mux_scheme, run_ber_sweep, write_ber_csv, MuxScheme, SimSpec, Simulator};
use hqbicm::mux::{enumerate_canonical, DMuxPattern, StreamProbabilities};
use hqbicm::optimizer::{
    alpha_grid, optimize as search, optimize_alphas, optimize_fading_fixed, prepare_candidates,
    DesignResult, SearchSpace,
};
use hqbicm::spectrum::{compute_ewds, expected_ewds, RandomizedMux, WeightSpectrum};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::fs;

type Result<T> = std::result::Result<T, CliError>;

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(config_err)
}

fn bits_of(order: usize) -> Result<usize> {
    if order < 2 || !order.is_power_of_two() {
        return Err(cfg(format!("M = {order} is not a power of two >= 2")));
    }
    Ok(order.trailing_zeros() as usize)
}

/// `"lo:step:hi"` or a comma separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || cfg(format!("invalid SNR grid {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    let parts: Vec<&str> = text.split(':').collect();
    let g = match parts.as_slice() {
        [lo, step, hi] => {
            let (lo, step, hi) = (num(lo).ok_or_else(bad)?, num(step).ok_or_else(bad)?, num(hi).ok_or_else(bad)?);
            if step <= 0.0 || hi < lo {
                return Err(bad());
            }
            presets::grid(lo, step, hi)
        }
        [list] => list.split(',').map(|s| num(s).ok_or_else(bad)).collect::<Result<_>>()?,
        _ => return Err(bad()),
    };
    if g.is_empty() {
        return Err(bad());
    }
    Ok(g)
}

fn parse_family(channel: Option<&str>, m: Option<f64>) -> Result<Family> {
    match (channel, m) {
        (None | Some("awgn"), None) => Ok(Family::Awgn),
        (Some("awgn"), Some(_)) => Err(cfg("--m is only valid with --channel nakagami")),
        (None | Some("nakagami"), Some(m)) if m > 0.0 && m.is_finite() => Ok(Family::Nakagami { m }),
        (None | Some("nakagami"), Some(m)) => Err(cfg(format!("Nakagami m must be positive, got {m}"))),
        (Some("nakagami"), None) => Err(cfg("--channel nakagami needs --m")),
        (Some(other), _) => Err(cfg(format!("unknown channel {other:?} (awgn or nakagami)"))),
    }
}

fn channel_at(family: Family, db: f64) -> Channel {
    match family {
        Family::Awgn => Channel::awgn_db(db),
        Family::Nakagami { m } => Channel::nakagami_db(m, db),
    }
}

fn family_matches(f: Family, channel: Option<&str>, m: Option<f64>) -> bool {
    let kind_ok = match channel {
        None => true,
        Some("awgn") => f == Family::Awgn,
        Some(_) => f != Family::Awgn,
    };
    kind_ok && m.is_none_or(|m| f.m() == Some(m))
}

fn check_preset_filter(channel: Option<&str>, m: Option<f64>) -> Result<()> {
    match channel {
        None | Some("awgn") | Some("nakagami") => {}
        Some(other) => return Err(cfg(format!("unknown channel {other:?} (awgn or nakagami)"))),
    }
    if channel == Some("awgn") && m.is_some() {
        return Err(cfg("--m is only valid with --channel nakagami"));
    }
    Ok(())
}

fn reject_with_preset(preset: &str, flags: &[(&str, bool)]) -> Result<()> {
    match flags.iter().find(|(_, set)| *set) {
        Some((name, _)) => Err(cfg(format!(
            "--{name} cannot be combined with --preset {preset}; presets fix the scenario"
        ))),
        None => Ok(()),
    }
}

fn trellis(code: &str) -> Result<Trellis> {
    Ok(ConvCode::from_octal(code).map_err(config_err)?.trellis())
}

/// Streams implied by a mux description, when it names them.
fn mux_streams(mux: &str) -> Option<usize> {
    let mux = mux.trim();
    if mux == "s" || mux.starts_with("s-punctured:") {
        return None;
    }
    if let Some(t) = mux.strip_prefix("rmux:") {
        return StreamProbabilities::parse(t).ok().map(|p| p.streams());
    }
    DMuxPattern::parse(mux, None).ok().map(|p| p.streams())
}

fn spectrum_for(tr: &Trellis, mux: &str, streams: usize, wmax: u32) -> Result<WeightSpectrum> {
    let n = tr.outputs();
    let s = match parse_mux_scheme(mux, streams).map_err(config_err)? {
        MuxScheme::Deterministic(p) => compute_ewds(tr, &p, wmax),
        MuxScheme::Randomized(t) => expected_ewds(tr, &RandomizedMux::from_probabilities(&t), wmax),
        MuxScheme::Single(None) => expected_ewds(tr, &RandomizedMux::uniform(n, streams), wmax),
        MuxScheme::Single(Some(p)) => {
            expected_ewds(tr, &RandomizedMux::uniform(n, streams).punctured(&p), wmax)
        }
    };
    s.map_err(config_err)
}

pub fn constellation(a: &ConstellationArgs) -> Result<Prepared> {
    let bits = bits_of(a.order)?;
    let alphas = match &a.alphas {
        Some(v) => v.clone(),
        None => Constellation::equally_spaced(a.order).map_err(config_err)?.alphas().to_vec(),
    };
    let c = if a.unchecked {
        Constellation::new_unchecked(&alphas, a.order)
    } else {
        Constellation::new(&alphas, a.order)
    }
    .map_err(config_err)?;
    let mut warnings = Vec::new();
    if let Err(v) = validate_region(&alphas) {
        warnings.push(format!("alphas outside the labelling region: {v}"));
    }
    let config = json!({ "M": a.order, "alphas": alphas, "unchecked": a.unchecked, "bits": bits });
    Ok(Prepared {
        command: "constellation",
        config,
        seed: None,
        run: Box::new(move |hash| {
            let mut v = to_value(&ConstellationDump::from(&c))?;
            v["schema"] = json!(SCHEMA_VERSION);
            v["config_hash"] = json!(hash);
            let body = serde_json::to_string_pretty(&v).map_err(config_err)? + "\n";
            Ok(Report { body, warnings })
        }),
    })
}

#[derive(Serialize)]
struct SpectrumConfig {
    code: String,
    mux: String,
    q: usize,
    wmax: u32,
    only: Option<Vec<Vec<u32>>>,
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Prepared> {
    let sc = if a.example2 {
        SpectrumConfig {
            code: "5,7".into(),
            mux: "1,2,2/1,3,3".into(),
            q: 3,
            wmax: 5,
            only: Some(vec![vec![2, 1, 2], vec![1, 2, 2]]),
        }
    } else {
        let n = ConvCode::from_octal(&a.code).map_err(config_err)?.outputs();
        let mux = a.mux.trim().to_string();
        let q = if mux == "identity" {
            a.q.unwrap_or(n)
        } else {
            match (a.q, mux_streams(&mux)) {
                (Some(q), Some(s)) if q != s => {
                    return Err(cfg(format!("--q {q} disagrees with the {s} streams of --mux")))
                }
                (_, Some(s)) => s,
                (Some(q), None) => q,
                (None, None) => return Err(cfg(format!("--mux {mux} needs --q"))),
            }
        };
        let mux = if mux == "identity" {
            if q == n {
                DMuxPattern::identity(n).text()
            } else if q == 1 {
                DMuxPattern::new(vec![vec![0]; n], 1).map_err(config_err)?.text()
            } else {
                return Err(cfg(format!("identity multiplexing needs --q 1 or --q {n}")));
            }
        } else {
            mux
        };
        SpectrumConfig {
            code: a.code.clone(),
            mux,
            q,
            wmax: a.wmax,
            only: None,
        }
    };
    let tr = trellis(&sc.code)?;
    let config = to_value(&sc)?;
    Ok(Prepared {
        command: "spectrum",
        config,
        seed: None,
        run: Box::new(move |hash| {
            let mut s = spectrum_for(&tr, &sc.mux, sc.q, sc.wmax)?;
            if let Some(only) = &sc.only {
                let mut kept = WeightSpectrum::new(s.streams(), s.wmax(), s.phases());
                for w in only {
                    if let Some(b) = s.get(w) {
                        kept.add(w.clone(), b.clone());
                    }
                }
                s = kept;
            }
            let mut buf = csv_preamble("spectrum", hash).into_bytes();
            s.write_csv(&mut buf)?;
            Ok(Report {
                body: String::from_utf8(buf).map_err(config_err)?,
                warnings: Vec::new(),
            })
        }),
    })
}

pub fn bound(a: &BoundArgs) -> Result<Prepared> {
    let curves = match &a.preset {
        Some(p) => {
            reject_with_preset(
                p,
                &[
                    ("code", a.code.is_some()),
                    ("mux", a.mux.is_some()),
                    ("M", a.order.is_some()),
                    ("alphas", a.alphas.is_some()),
                    ("snr-db", a.snr_db.is_some()),
                    ("wmax", a.wmax.is_some()),
                    ("grid-step", a.grid_step.is_some()),
                ],
            )?;
            check_preset_filter(a.channel.as_deref(), a.m)?;
            let all = presets::bound_preset(p).ok_or_else(|| {
                cfg(format!("unknown bound preset {p:?} (one of {})", presets::BOUND_PRESETS.join(", ")))
            })?;
            let kept: Vec<Curve> = all
                .into_iter()
                .filter(|c| family_matches(c.family, a.channel.as_deref(), a.m))
                .collect();
            if kept.is_empty() {
                return Err(cfg(format!("preset {p} has no curves for the requested channel")));
            }
            kept
        }
        None => vec![custom_curve(a)?],
    };
    for c in &curves {
        bits_of(c.order)?;
        if let Alphas::Fixed(al) = &c.alphas {
            Constellation::new(al, c.order).map_err(config_err)?;
        }
        trellis(&c.code)?;
    }
    let config = json!({ "preset": a.preset, "curves": to_value(&curves)? });
    Ok(Prepared {
        command: "bound",
        config,
        seed: None,
        run: Box::new(move |hash| {
            let mut cache = HashMap::new();
            let mut points = Vec::new();
            for c in &curves {
                points.extend(eval_curve(c, &mut cache)?);
            }
            let mut warnings = Vec::new();
            let loose = points.iter().filter(|p| p.ub > VALIDITY_THRESHOLD).count();
            if loose > 0 {
                warnings.push(format!(
                    "{loose} of {} points have a bound above {VALIDITY_THRESHOLD:e}, where it is not tight",
                    points.len()
                ));
            }
            let truncated = points
                .iter()
                .filter(|p| p.ub <= VALIDITY_THRESHOLD && p.last_shell > 1e-3 * p.ub)
                .count();
            if truncated > 0 {
                warnings.push(format!(
                    "{truncated} points have a last weight shell above 0.1% of the bound; raise --wmax"
                ));
            }
            let mut buf = csv_preamble("bound", hash).into_bytes();
            write_bound_csv(&mut buf, &points)?;
            Ok(Report {
                body: String::from_utf8(buf).map_err(config_err)?,
                warnings,
            })
        }),
    })
}

fn custom_curve(a: &BoundArgs) -> Result<Curve> {
    let mux = a
        .mux
        .clone()
        .ok_or_else(|| cfg("--mux is required without --preset"))?;
    let code = a.code.clone().unwrap_or_else(|| "5,7".into());
    let family = parse_family(a.channel.as_deref(), a.m)?;
    let listed: Option<Vec<f64>> = match a.alphas.as_deref() {
        None | Some("opt") | Some("sweep") => None,
        Some(t) => Some(
            t.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| cfg(format!("invalid alphas {t:?}"))))
                .collect::<Result<_>>()?,
        ),
    };
    let order = match (a.order, &listed, mux_streams(&mux)) {
        (Some(m), _, _) => m,
        (None, Some(l), _) => 1 << (l.len() + 1),
        (None, None, Some(s)) => 1 << s,
        (None, None, None) => return Err(cfg("cannot infer M; pass --M")),
    };
    let bits = bits_of(order)?;
    if let Some(s) = mux_streams(&mux) {
        if s != bits {
            return Err(cfg(format!("--mux has {s} streams but M = {order} has {bits} bit levels")));
        }
    }
    let alphas = match (a.alphas.as_deref(), listed) {
        (Some("opt"), _) => Alphas::PerSnr { alpha1: None },
        (Some("sweep"), _) => Alphas::Sweep,
        (_, Some(l)) => Alphas::Fixed(l),
        (None, None) => {
            Alphas::Fixed(Constellation::equally_spaced(order).map_err(config_err)?.alphas().to_vec())
        }
        (Some(_), None) => unreachable!(),
    };
    let snr_db = parse_grid(
        a.snr_db
            .as_deref()
            .ok_or_else(|| cfg("--snr-db is required without --preset"))?,
    )?;
    let wmax = a.wmax.unwrap_or(match family {
        Family::Awgn => 125,
        Family::Nakagami { .. } => 30,
    });
    let grid_step = a.grid_step.unwrap_or(0.01);
    Ok(Curve {
        code,
        mux,
        order,
        family,
        wmax,
        alphas,
        snr_db,
        grid_step,
    })
}

type Cache = HashMap<(String, String, usize, u32), SpectrumTable>;

fn table_for(c: &Curve, tr: &Trellis, cache: &mut Cache) -> Result<SpectrumTable> {
    let key = (c.code.clone(), c.mux.clone(), c.order, c.wmax);
    if let Some(t) = cache.get(&key) {
        return Ok(t.clone());
    }
    let bits = bits_of(c.order)?;
    let t = SpectrumTable::new(&spectrum_for(tr, &c.mux, bits, c.wmax)?);
    cache.insert(key, t.clone());
    Ok(t)
}

fn eval_curve(c: &Curve, cache: &mut Cache) -> Result<Vec<BoundPoint>> {
    let tr = trellis(&c.code)?;
    let bits = bits_of(c.order)?;
    let k_c = tr.inputs();
    let first = channel_at(c.family, c.snr_db[0]);
    match &c.alphas {
        Alphas::Fixed(al) => {
            let table = table_for(c, &tr, cache)?;
            let con = Constellation::new(al, c.order).map_err(config_err)?;
            bound_sweep(&table, &con, &first, k_c, &c.snr_db, &c.mux).map_err(config_err)
        }
        Alphas::Sweep => {
            let table = table_for(c, &tr, cache)?;
            let grid = alpha_grid(bits, c.grid_step).map_err(config_err)?;
            let mut out = Vec::new();
            for &db in &c.snr_db {
                let ch = channel_at(c.family, db);
                out.extend(alpha_sweep(&table, c.order, &ch, k_c, &grid, &c.mux).map_err(config_err)?);
            }
            Ok(out)
        }
        Alphas::PerSnr { alpha1 } => {
            let table = table_for(c, &tr, cache)?;
            let mut grid = alpha_grid(bits, c.grid_step).map_err(config_err)?;
            if let Some(a1) = alpha1 {
                grid.retain(|g| (g[0] - a1).abs() < 1e-9);
            }
            c.snr_db
                .iter()
                .map(|&db| {
                    let ch = channel_at(c.family, db);
                    let (alphas, ub) =
                        optimize_alphas(&table, c.order, &ch, &grid, k_c).map_err(config_err)?;
                    Ok(point(&ch, ub.value, ub.last_shell, alphas, c.mux.clone()))
                })
                .collect()
        }
        Alphas::Joint { period } => {
            let patterns = enumerate_canonical(tr.outputs(), *period, bits).map_err(config_err)?;
            let cands = prepare_candidates(&tr, &patterns, c.wmax).map_err(config_err)?;
            let mut space = SearchSpace::new(c.order);
            space.grid_step = c.grid_step;
            space.k_c = k_c;
            c.snr_db
                .iter()
                .map(|&db| {
                    let ch = channel_at(c.family, db);
                    let r = search(&cands, &ch, &space).map_err(config_err)?;
                    let con = Constellation::new_unchecked(&r.alphas, c.order).map_err(config_err)?;
                    let terms = SaddleTerms::for_constellation(&con, &ch).map_err(config_err)?;
                    let ub = union_bound_terms(&cands[r.pattern_id].table, &terms, k_c);
                    Ok(point(&ch, ub.value, ub.last_shell, r.alphas, r.mux))
                })
                .collect()
        }
    }
}

fn point(ch: &Channel, ub: f64, last_shell: f64, alphas: Vec<f64>, mux_id: String) -> BoundPoint {
    BoundPoint {
        gamma_db: ch.snr_db(),
        ub,
        last_shell,
        channel: ch.name().to_string(),
        m: ch.m(),
        alphas,
        mux_id,
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<Prepared> {
    let spec = match &a.config {
        Some(path) => {
            let flags = [
                ("code", a.code.is_some()),
                ("mux", a.mux.is_some()),
                ("M", a.order.is_some()),
                ("alphas", a.alphas.is_some()),
                ("channel", a.channel.is_some()),
                ("m", a.m.is_some()),
                ("snr-db", a.snr_db.is_some()),
                ("block-len", a.block_len.is_some()),
                ("min-errors", a.min_errors.is_some()),
                ("max-blocks", a.max_blocks.is_some()),
                ("seed", a.seed.is_some()),
                ("uncoded", a.uncoded),
            ];
            if let Some((name, _)) = flags.iter().find(|(_, set)| *set) {
                return Err(cfg(format!("--{name} cannot be combined with --config")));
            }
            let text = fs::read_to_string(path)
                .map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
            if path.extension().is_some_and(|e| e == "json") {
                serde_json::from_str::<SimSpec>(&text).map_err(config_err)?
            } else {
                toml::from_str::<SimSpec>(&text).map_err(config_err)?
            }
        }
        None => spec_from_flags(a)?,
    };
    let sim_cfg = spec.build().map_err(config_err)?;
    let sim = Simulator::new(sim_cfg).map_err(config_err)?;
    let channel = spec.channel().map_err(config_err)?;
    let config = to_value(&spec)?;
    Ok(Prepared {
        command: "simulate",
        config,
        seed: Some(spec.seed),
        run: Box::new(move |hash| {
            let points = run_ber_sweep(&sim, &channel, &spec.snr_db).map_err(config_err)?;
            let short: Vec<String> = points
                .iter()
                .filter(|p| p.errors < spec.min_errors)
                .map(|p| format!("{} dB", p.gamma_db))
                .collect();
            let mut warnings = Vec::new();
            if !short.is_empty() {
                warnings.push(format!(
                    "fewer than {} bit errors at {} (block limit reached)",
                    spec.min_errors,
                    short.join(", ")
                ));
            }
            let mut buf = csv_preamble("simulate", hash).into_bytes();
            write_ber_csv(&mut buf, &points, hash)?;
            Ok(Report {
                body: String::from_utf8(buf).map_err(config_err)?,
                warnings,
            })
        }),
    })
}

fn spec_from_flags(a: &SimulateArgs) -> Result<SimSpec> {
    let mux = match (&a.mux, a.uncoded) {
        (Some(m), _) => m.clone(),
        (None, true) => "s".into(),
        (None, false) => return Err(cfg("--mux or --config is required")),
    };
    let order = match (a.order, &a.alphas, mux_streams(&mux)) {
        (Some(m), _, _) => m,
        (None, Some(l), _) => 1 << (l.len() + 1),
        (None, None, Some(s)) => 1 << s,
        (None, None, None) => return Err(cfg("cannot infer M; pass --M")),
    };
    bits_of(order)?;
    let alphas = match &a.alphas {
        Some(l) => l.clone(),
        None => Constellation::equally_spaced(order).map_err(config_err)?.alphas().to_vec(),
    };
    let family = parse_family(a.channel.as_deref(), a.m)?;
    let snr_db = parse_grid(a.snr_db.as_deref().unwrap_or("4:1:12"))?;
    let defaults: SimSpec = toml::from_str(
        "code = \"5,7\"\nmux = \"s\"\norder = 2\nchannel = \"awgn\"\nsnr_db = [0.0]\n",
    )
    .map_err(config_err)?;
    Ok(SimSpec {
        code: a.code.clone().unwrap_or(defaults.code),
        mux,
        order,
        alphas,
        channel: match family {
            Family::Awgn => "awgn".into(),
            Family::Nakagami { .. } => "nakagami".into(),
        },
        m: family.m(),
        snr_db,
        block_len: a.block_len.unwrap_or(defaults.block_len),
        min_errors: a.min_errors.unwrap_or(defaults.min_errors),
        max_blocks: a.max_blocks.unwrap_or(defaults.max_blocks),
        seed: a.seed.unwrap_or(defaults.seed),
        uncoded: a.uncoded,
    })
}

pub fn optimize(a: &OptimizeArgs) -> Result<Prepared> {
    let scenarios = match &a.preset {
        Some(p) => {
            reject_with_preset(
                p,
                &[
                    ("code", a.code.is_some()),
                    ("M", a.order.is_some()),
                    ("period", a.period.is_some()),
                    ("snr-db", a.snr_db.is_some()),
                    ("wmax", a.wmax.is_some()),
                    ("grid-step", a.grid_step.is_some()),
                    ("target", a.target.is_some()),
                    ("bracket", a.bracket.is_some()),
                ],
            )?;
            check_preset_filter(a.channel.as_deref(), a.m)?;
            let all = presets::optimize_preset(p).ok_or_else(|| {
                cfg(format!(
                    "unknown optimize preset {p:?} (one of {})",
                    presets::OPTIMIZE_PRESETS.join(", ")
                ))
            })?;
            let kept: Vec<Scenario> = all
                .into_iter()
                .filter(|s| family_matches(s.family, a.channel.as_deref(), a.m))
                .collect();
            if kept.is_empty() {
                return Err(cfg(format!("preset {p} has no scenarios for the requested channel")));
            }
            kept
        }
        None => vec![custom_scenario(a)?],
    };
    for s in &scenarios {
        bits_of(s.order)?;
        trellis(&s.code)?;
    }
    let ranked = a.ranked;
    let config = json!({ "preset": a.preset, "ranked": ranked, "scenarios": to_value(&scenarios)? });
    Ok(Prepared {
        command: "optimize",
        config,
        seed: None,
        run: Box::new(move |hash| {
            let mut cards: Vec<DesignResult> = Vec::new();
            let mut warnings = Vec::new();
            for s in &scenarios {
                let (c, w) = run_scenario(s, ranked)?;
                cards.extend(c);
                warnings.extend(w);
            }
            for c in cards.iter().filter(|c| c.ub > VALIDITY_THRESHOLD) {
                warnings.push(format!(
                    "{} at {} dB: bound {:.3e} is above {VALIDITY_THRESHOLD:e}, where it is not tight",
                    c.channel, c.gamma_db, c.ub
                ));
            }
            let doc = json!({ "schema": SCHEMA_VERSION, "config_hash": hash, "cards": to_value(&cards)? });
            let body = serde_json::to_string_pretty(&doc).map_err(config_err)? + "\n";
            Ok(Report { body, warnings })
        }),
    })
}

fn custom_scenario(a: &OptimizeArgs) -> Result<Scenario> {
    let order = a.order.ok_or_else(|| cfg("--M is required without --preset"))?;
    let bits = bits_of(order)?;
    let family = parse_family(a.channel.as_deref(), a.m)?;
    let design = match a.target {
        Some(target) => {
            let Family::Nakagami { .. } = family else {
                return Err(cfg("--target designs need a nakagami channel"));
            };
            if a.snr_db.is_some() {
                return Err(cfg("--snr-db cannot be combined with --target; use --bracket"));
            }
            if !(target > 0.0 && target < 1.0) {
                return Err(cfg(format!("--target must lie in (0, 1), got {target}")));
            }
            let (lo_db, hi_db) = match a.bracket.as_deref().unwrap_or("10:30").split_once(':') {
                Some((lo, hi)) => match (lo.trim().parse::<f64>(), hi.trim().parse::<f64>()) {
                    (Ok(lo), Ok(hi)) if lo < hi => (lo, hi),
                    _ => return Err(cfg("--bracket must be \"lo:hi\" with lo < hi")),
                },
                None => return Err(cfg("--bracket must be \"lo:hi\" with lo < hi")),
            };
            Design::Fixed {
                target,
                lo_db,
                hi_db,
                tol_db: 0.01,
            }
        }
        None => {
            if a.bracket.is_some() {
                return Err(cfg("--bracket only applies with --target"));
            }
            Design::PerSnr {
                snr_db: parse_grid(
                    a.snr_db
                        .as_deref()
                        .ok_or_else(|| cfg("--snr-db or --target is required without --preset"))?,
                )?,
            }
        }
    };
    Ok(Scenario {
        code: a.code.clone().unwrap_or_else(|| "5,7".into()),
        order,
        period: a.period.unwrap_or(bits),
        family,
        wmax: a.wmax.unwrap_or(match family {
            Family::Awgn => 125,
            Family::Nakagami { .. } => 30,
        }),
        grid_step: a.grid_step.unwrap_or(0.01),
        design,
    })
}

fn run_scenario(s: &Scenario, ranked: bool) -> Result<(Vec<DesignResult>, Vec<String>)> {
    let tr = trellis(&s.code)?;
    let bits = bits_of(s.order)?;
    let patterns = enumerate_canonical(tr.outputs(), s.period, bits).map_err(config_err)?;
    let cands = prepare_candidates(&tr, &patterns, s.wmax).map_err(config_err)?;
    let mut space = SearchSpace::new(s.order);
    space.grid_step = s.grid_step;
    space.k_c = tr.inputs();
    space.keep_ranked = ranked;
    let cards = match (&s.design, s.family) {
        (Design::PerSnr { snr_db }, f) => snr_db
            .iter()
            .map(|&db| search(&cands, &channel_at(f, db), &space).map_err(config_err))
            .collect::<Result<Vec<_>>>()?,
        (&Design::Fixed { target, lo_db, hi_db, tol_db }, Family::Nakagami { m }) => {
            let r = optimize_fading_fixed(&cands, m, target, &space, (lo_db, hi_db), tol_db)
                .map_err(config_err)?;
            vec![r]
        }
        (Design::Fixed { .. }, Family::Awgn) => {
            return Err(cfg("--target designs need a nakagami channel"))
        }
    };
    let mut warnings = Vec::new();
    for c in &cards {
        let ch = channel_at(s.family, c.gamma_db);
        let con = Constellation::new_unchecked(&c.alphas, s.order).map_err(config_err)?;
        let terms = SaddleTerms::for_constellation(&con, &ch).map_err(config_err)?;
        let ub = union_bound_terms(&cands[c.pattern_id].table, &terms, space.k_c);
        if ub.last_shell > 1e-3 * ub.value {
            warnings.push(format!(
                "{} at {} dB: last weight shell is {:.1}% of the bound; raise --wmax",
                c.channel,
                c.gamma_db,
                100.0 * ub.last_shell / ub.value
            ));
        }
    }
    Ok((cards, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("1:0.5:2").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_grid("3, 5").unwrap(), vec![3.0, 5.0]);
        assert!(parse_grid("2:0:3").is_err());
        assert!(parse_grid("a").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn families_parse() {
        assert_eq!(parse_family(None, None).unwrap(), Family::Awgn);
        assert_eq!(parse_family(None, Some(2.0)).unwrap(), Family::Nakagami { m: 2.0 });
        assert!(parse_family(Some("awgn"), Some(2.0)).is_err());
        assert!(parse_family(Some("nakagami"), None).is_err());
        assert!(parse_family(Some("rician"), None).is_err());
    }

    #[test]
    fn mux_stream_counts() {
        assert_eq!(mux_streams("1,2,2/1,3,3"), Some(3));
        assert_eq!(mux_streams("rmux:0,1/1,0"), Some(2));
        assert_eq!(mux_streams("s"), None);
    }
}
