//! Under zero propensity weights the chance of a complaint given a violation
//! must not vary with any neighbourhood attribute.

use std::collections::HashMap;

use propensity_core::data::Demographic;
use propensity_core::synth::{generate, SynthConfig};

/// Upper tail of the chi-square distribution with four degrees of freedom.
fn chi2_sf_4(x: f64) -> f64 {
    (-x / 2.0).exp() * (1.0 + x / 2.0)
}

#[test]
fn complaint_rate_is_flat_across_quintiles_under_the_null() {
    let cfg = SynthConfig {
        seed: 17,
        ..SynthConfig::default()
    };
    assert!(cfg.propensity_weights.is_empty());
    let city = generate(&cfg).unwrap();
    let profiles: HashMap<&str, _> = city.block_groups.iter().map(|g| (g.block_group_id.as_str(), g)).collect();

    // One observation per violated building-season: did anyone complain?
    let mut obs = Vec::new();
    for b in &city.buildings {
        let g = profiles[b.block_group_id.as_str()];
        for (s, &v) in &b.violation_flag {
            if v {
                obs.push((g, b.complaints_in(*s) > 0));
            }
        }
    }
    assert!(obs.len() > 2_000);

    let mut smallest_p: f64 = 1.0;
    for d in [Demographic::MedianIncome, Demographic::PctMinority, Demographic::PctOver70, Demographic::UnemploymentRate] {
        let mut vals: Vec<f64> = obs.iter().map(|(g, _)| g.value(d)).collect();
        vals.sort_by(f64::total_cmp);
        let cut: Vec<f64> = (1..5).map(|k| vals[k * vals.len() / 5]).collect();
        let mut table = [[0.0f64; 2]; 5];
        for (g, c) in &obs {
            let bin = cut.iter().filter(|&&x| g.value(d) >= x).count();
            table[bin][usize::from(*c)] += 1.0;
        }
        let total: f64 = table.iter().flatten().sum();
        let col: [f64; 2] = [0, 1].map(|j| table.iter().map(|r| r[j]).sum());
        let mut stat = 0.0;
        for r in &table {
            let row: f64 = r.iter().sum();
            for j in 0..2 {
                let e = row * col[j] / total;
                stat += (r[j] - e).powi(2) / e;
            }
        }
        smallest_p = smallest_p.min(chi2_sf_4(stat));
    }
    // Four tests: a Bonferroni-style floor keeps the false alarm rate under 0.4%.
    assert!(smallest_p > 0.001, "smallest p {smallest_p}");
}

#[test]
fn injected_weights_do_move_the_complaint_rate() {
    let cfg = SynthConfig {
        seed: 17,
        ..SynthConfig::paper_like()
    };
    let city = generate(&cfg).unwrap();
    let profiles: HashMap<&str, _> = city.block_groups.iter().map(|g| (g.block_group_id.as_str(), g)).collect();
    let (mut lo, mut hi) = ((0.0, 0.0), (0.0, 0.0));
    let mut incomes: Vec<f64> = city.block_groups.iter().map(|g| g.median_income).collect();
    incomes.sort_by(f64::total_cmp);
    let median = incomes[incomes.len() / 2];
    for b in &city.buildings {
        let g = profiles[b.block_group_id.as_str()];
        for (s, &v) in &b.violation_flag {
            if v {
                let side = if g.median_income < median { &mut lo } else { &mut hi };
                side.0 += 1.0;
                side.1 += f64::from(u8::from(b.complaints_in(*s) > 0));
            }
        }
    }
    assert!(hi.1 / hi.0 > lo.1 / lo.0 + 0.05, "low {lo:?} high {hi:?}");
}
