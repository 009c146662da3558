mod common;

use std::collections::{BTreeMap, BTreeSet};

use breakthru::breakthrough::{
    country_subfield_counts, select_breakthroughs, subfield_series, window_grid, PanelLabels,
};
use breakthru::impact::{score_all, NbncOptions};
use breakthru::synth::{generate, SynthConfig};
use breakthru::BreakthroughClass;
use common::build;
use proptest::prelude::*;

fn synth_corpus(seed: u64, works: usize) -> breakthru::CitationCorpus {
    let cfg = SynthConfig { works, seed, first_year: 1990, last_year: 2010, subfields: 5, countries: 8, ..SynthConfig::default() };
    build(&generate(&cfg).unwrap())
}

/// ceil(n/20) for q = 0.05, clamped below at 1, without floats.
fn expected_k(n: usize) -> usize {
    n.div_ceil(20).max(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bt_is_cn_plus_di_and_sizes_follow_policy(seed in any::<u64>(), works in 150usize..700) {
        let c = synth_corpus(seed, works);
        let scores = score_all::<f64>(&c, &NbncOptions::default(), 1990..=2010);
        let sel = select_breakthroughs(&c, &scores, 0.05, 1990..=2010).unwrap();
        let per_year = common::count_by(c.indices().map(|w| c.year(w)));
        for (y, n) in &per_year {
            prop_assert_eq!(sel.in_year(*y).count(), expected_k(*n as usize));
            prop_assert_eq!(sel.scored_per_year[y], *n as usize);
        }
        let table = subfield_series(&sel.records, &c, 1990..=2010, None);
        for s in table.series.values() {
            for i in 0..s.years.len() {
                prop_assert_eq!(s.bt[i], s.cn[i] + s.di[i]);
            }
        }
        // every selected, labelled record lands in exactly one series cell
        let labelled = sel.records.iter().filter(|r| r.subfield.is_some()).count() as u64;
        let counted: u64 = table.series.values().flat_map(|s| s.bt.iter()).sum();
        prop_assert_eq!(labelled, counted);
    }

    #[test]
    fn selection_monotone_in_q_and_idempotent(seed in any::<u64>(), works in 100usize..500, q1 in 0.01f64..0.5, dq in 0.0f64..0.4) {
        let c = synth_corpus(seed, works);
        let scores = score_all::<f64>(&c, &NbncOptions::default(), 1990..=2010);
        let q2 = (q1 + dq).min(0.99);
        let a = select_breakthroughs(&c, &scores, q1, 1990..=2010).unwrap();
        let b = select_breakthroughs(&c, &scores, q2, 1990..=2010).unwrap();
        let ids = |s: &breakthru::breakthrough::Selection<f64>| s.records.iter().map(|r| r.work_id.clone()).collect::<BTreeSet<_>>();
        prop_assert!(ids(&a).is_subset(&ids(&b)));
        prop_assert_eq!(&a, &select_breakthroughs(&c, &scores, q1, 1990..=2010).unwrap());
        // selected works are never outscored by an unselected work of the same year
        let chosen = ids(&a);
        for r in &a.records {
            for (w, s) in &scores {
                if c.year(*w) == r.year && !chosen.contains(c.id(*w)) {
                    prop_assert!(s.nbnc.value <= r.nbnc);
                }
            }
        }
    }

    #[test]
    fn panel_sums_follow_full_counting(seed in any::<u64>(), works in 150usize..700) {
        let c = synth_corpus(seed, works);
        let scores = score_all::<f64>(&c, &NbncOptions::default(), 1990..=2010);
        let sel = select_breakthroughs(&c, &scores, 0.1, 1990..=2010).unwrap();
        let labels = PanelLabels::from_records(&sel.records, None);
        for w in window_grid(1990, 2010, 7).unwrap() {
            for kind in [BreakthroughClass::Consolidating, BreakthroughClass::Disruptive] {
                let p = country_subfield_counts(&sel.records, w, kind, &labels);
                let mut want: BTreeMap<u32, u64> = BTreeMap::new();
                let (mut unlabeled, mut unattributed) = (0, 0);
                for r in sel.records.iter().filter(|r| r.class == kind && w.contains(r.year)) {
                    match r.subfield {
                        None => unlabeled += 1,
                        Some(_) if r.countries.is_empty() => unattributed += 1,
                        Some(s) => *want.entry(s).or_default() += r.countries.len() as u64,
                    }
                }
                for (j, s) in p.subfields.iter().enumerate() {
                    prop_assert_eq!(p.counts.column(j).sum(), want.get(s).copied().unwrap_or(0));
                }
                prop_assert_eq!(p.unlabeled, unlabeled);
                prop_assert_eq!(p.unattributed, unattributed);
            }
        }
    }
}
