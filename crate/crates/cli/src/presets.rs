//! Figure scenarios as plain configuration.

use serde::Serialize;

const CODE: &str = "5,7";
const Q2: [&str; 4] = ["1,1/2,2", "1,2/1,2", "1,2/2,1", "2,2/1,1"];
const K4: &str = "2,2/1,1";
const K_AWGN: &str = "1,2,3/3,2,1";
const K_FADING_LOW_M: &str = "2:1,3:1,3:2/2:2,1:1,1:2";
const RMUX_4PAM: &str = "rmux:0,1/1,0";
const RMUX_8PAM: &str = "rmux:0,1:3,2:3/2:3,1:3,0";
const PUNCTURED: &str = "s-punctured:10,11,01";

/// Channel family of a scenario; the SNR comes from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Family {
    Awgn,
    Nakagami { m: f64 },
}

impl Family {
    pub fn m(&self) -> Option<f64> {
        match *self {
            Family::Awgn => None,
            Family::Nakagami { m } => Some(m),
        }
    }
}

/// How the constellation of a curve is chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphas {
    Fixed(Vec<f64>),
    /// Best grid point at every SNR, optionally with `alpha_1` pinned.
    PerSnr { alpha1: Option<f64> },
    /// Bound over the whole grid at each SNR.
    Sweep,
    /// Pattern and constellation searched jointly at every SNR.
    Joint { period: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub code: String,
    pub mux: String,
    pub order: usize,
    pub family: Family,
    pub wmax: u32,
    pub alphas: Alphas,
    pub snr_db: Vec<f64>,
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Design {
    /// One card per SNR.
    PerSnr { snr_db: Vec<f64> },
    /// One card at the smallest SNR whose bound reaches `target`.
    Fixed { target: f64, lo_db: f64, hi_db: f64, tol_db: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub code: String,
    pub order: usize,
    pub period: usize,
    pub family: Family,
    pub wmax: u32,
    pub grid_step: f64,
    pub design: Design,
}

pub fn grid(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()
}

fn wmax_for(family: Family) -> u32 {
    match family {
        Family::Awgn => 125,
        Family::Nakagami { .. } => 30,
    }
}

fn curve(mux: &str, order: usize, family: Family, alphas: Alphas, snr_db: Vec<f64>) -> Curve {
    Curve {
        code: CODE.into(),
        mux: mux.into(),
        order,
        family,
        wmax: wmax_for(family),
        alphas,
        snr_db,
        grid_step: 0.01,
    }
}

fn alpha_sweep(family: Family, db: f64) -> Vec<Curve> {
    Q2.iter()
        .map(|k| curve(k, 4, family, Alphas::Sweep, vec![db]))
        .collect()
}

pub const BOUND_PRESETS: &[&str] = &[
    "fig3", "fig3-awgn", "fig3-fading", "fig4", "fig6", "fig6-awgn", "fig6-fading", "fig7",
    "fig8",
];

pub const OPTIMIZE_PRESETS: &[&str] = &[
    "fig4", "fig4-awgn", "fig4-fading", "fig5", "fig5-awgn", "fig5-fading",
];

/// Curves of a `bound` preset.
pub fn bound_preset(name: &str) -> Option<Vec<Curve>> {
    let awgn = Family::Awgn;
    let nak = |m| Family::Nakagami { m };
    let es4 = || Alphas::Fixed(vec![0.5]);
    let es8 = || Alphas::Fixed(vec![0.5, 0.25]);
    let per_snr = || Alphas::PerSnr { alpha1: None };
    let curves = match name {
        "fig3" => [bound_preset("fig3-awgn")?, bound_preset("fig3-fading")?].concat(),
        "fig3-awgn" => alpha_sweep(awgn, 10.0),
        "fig3-fading" => [alpha_sweep(nak(1.0), 16.0), alpha_sweep(nak(5.0), 12.0)].concat(),
        "fig4" => [awgn, nak(2.0), nak(7.0), nak(20.0)]
            .into_iter()
            .map(|f| curve(K4, 4, f, Alphas::Sweep, vec![9.0]))
            .collect(),
        "fig6" => [bound_preset("fig6-awgn")?, bound_preset("fig6-fading")?].concat(),
        "fig6-awgn" | "fig6-fading" => {
            let panels: Vec<(Family, Vec<f64>)> = if name == "fig6-awgn" {
                vec![(awgn, grid(4.0, 0.5, 14.0))]
            } else {
                vec![(nak(5.0), grid(6.0, 0.5, 20.0)), (nak(1.0), grid(10.0, 1.0, 34.0))]
            };
            panels
                .into_iter()
                .flat_map(|(f, g)| {
                    vec![
                        curve(K4, 4, f, per_snr(), g.clone()),
                        curve("s", 4, f, es4(), g.clone()),
                        curve(RMUX_4PAM, 4, f, es4(), g),
                    ]
                })
                .collect()
        }
        "fig7" => {
            let g = grid(8.0, 0.5, 18.0);
            let mut k = curve(K_AWGN, 8, awgn, per_snr(), g.clone());
            let mut s = curve("s", 8, awgn, es8(), g.clone());
            let mut r = curve(RMUX_8PAM, 8, awgn, es8(), g.clone());
            let mut h = curve(RMUX_8PAM, 8, awgn, Alphas::PerSnr { alpha1: Some(0.49) }, g.clone());
            let mut p = curve(PUNCTURED, 4, awgn, es4(), g);
            for c in [&mut k, &mut s, &mut r, &mut h, &mut p] {
                c.wmax = 30;
            }
            vec![k, s, r, h, p]
        }
        "fig8" => {
            let designs = [
                (1.0, K_FADING_LOW_M, vec![0.48, 0.20], grid(10.0, 1.0, 36.0)),
                (2.0, K_FADING_LOW_M, vec![0.47, 0.17], grid(10.0, 1.0, 30.0)),
                (5.0, K_AWGN, vec![0.42, 0.01], grid(8.0, 1.0, 24.0)),
            ];
            designs
                .into_iter()
                .flat_map(|(m, k, a, g)| {
                    let f = nak(m);
                    vec![
                        curve(k, 8, f, Alphas::Fixed(a), g.clone()),
                        curve("joint", 8, f, Alphas::Joint { period: 3 }, g.clone()),
                        curve("s", 8, f, es8(), g.clone()),
                        curve(RMUX_8PAM, 8, f, es8(), g),
                    ]
                })
                .collect()
        }
        _ => return None,
    };
    Some(curves)
}

fn scenario(order: usize, period: usize, family: Family, wmax: u32, design: Design) -> Scenario {
    Scenario {
        code: CODE.into(),
        order,
        period,
        family,
        wmax,
        grid_step: 0.01,
        design,
    }
}

/// Scenarios of an `optimize` preset.
pub fn optimize_preset(name: &str) -> Option<Vec<Scenario>> {
    let nak = |m| Family::Nakagami { m };
    let per = |lo, hi| Design::PerSnr { snr_db: grid(lo, 1.0, hi) };
    let s = match name {
        "fig4" => [optimize_preset("fig4-awgn")?, optimize_preset("fig4-fading")?].concat(),
        "fig4-awgn" => vec![scenario(4, 2, Family::Awgn, 125, per(4.0, 16.0))],
        "fig4-fading" => vec![
            scenario(4, 2, nak(1.0), 30, per(10.0, 30.0)),
            scenario(4, 2, nak(5.0), 30, per(6.0, 24.0)),
            scenario(4, 2, nak(20.0), 30, per(4.0, 20.0)),
        ],
        "fig5" => [optimize_preset("fig5-awgn")?, optimize_preset("fig5-fading")?].concat(),
        "fig5-awgn" => vec![scenario(8, 3, Family::Awgn, 30, per(10.0, 15.0))],
        "fig5-fading" => [1.0, 2.0, 5.0]
            .into_iter()
            .map(|m| {
                let d = Design::Fixed {
                    target: 1e-7,
                    lo_db: 10.0,
                    hi_db: 30.0,
                    tol_db: 0.01,
                };
                scenario(8, 3, nak(m), 30, d)
            })
            .collect(),
        _ => return None,
    };
    Some(s)
}
