use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::{Duration, NaiveDate};
use proptest::prelude::*;
use resi_core::alarms::{activity, hr_sat_series, high_activity, AlarmConfig, RankUnits};
use resi_core::baselines::{pi_index, ri_index, CellCounts, PiConfig, RiConfig};
use resi_core::catalog::{encode_record, filter_events, parse_catalog, parse_record, CatalogFilter, ColumnMap, Event};
use resi_core::clustering::{make_clusters, make_clusters_seeded};
use resi_core::entropy::{entropy_h, fill_hr_avr, resi, ResiPoint};
use resi_core::evaluation::{delay, prec};
use resi_core::grid::{bin_events, mesh_index, CellLayout, GridSpec, Mesh, Region};
use resi_core::time::{Month, TimeWindow, WindowLength};

fn arb_event() -> impl Strategy<Value = Event> {
    (
        0i64..(40 * 365 * 24 * 3600 * 100),
        -500_000i64..500_000,
        -1_000_000i64..1_000_000,
        -20i32..=99,
        proptest::option::of(0i64..70_000),
    )
        .prop_map(|(centis, lat_u, lon_u, tenths, depth)| Event {
            time: NaiveDate::from_ymd_opt(1980, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
                + Duration::milliseconds(centis * 10),
            lat: lat_u as f64 / 6000.0,
            lon: lon_u as f64 / 6000.0,
            depth: depth.map(|d| d as f64 / 100.0),
            magnitude: tenths as f64 / 10.0,
            lat_err: None,
            lon_err: None,
            time_err: None,
        })
}

/// Events on the default universe with coordinates on the 0.01' lattice.
fn arb_map_event() -> impl Strategy<Value = Event> {
    (0i64..(3 * 365 * 24 * 3600), 0i64..(24 * 6000), 0i64..(24 * 6000), 15i32..60).prop_map(|(secs, a, b, tenths)| Event {
        time: Month::ym(1983, 1).start() + Duration::seconds(secs),
        lat: (25 * 6000 + a) as f64 / 6000.0,
        lon: (125 * 6000 + b) as f64 / 6000.0,
        depth: Some(10.0),
        magnitude: tenths as f64 / 10.0,
        lat_err: None,
        lon_err: None,
        time_err: None,
    })
}

fn monthly_series(hr: &[Option<f64>]) -> Vec<ResiPoint> {
    let mut s: Vec<ResiPoint> = hr
        .iter()
        .enumerate()
        .map(|(k, v)| ResiPoint {
            cell: 0,
            window: TimeWindow { start: Month::ym(1983, 1).plus(k as i32), len: WindowLength::Month },
            h: v.unwrap_or(0.0),
            hr: v.unwrap_or(0.0),
            hr_avr: None,
            p_s: 1.0,
            residual: 0.0,
            clusters: usize::from(v.is_some()),
            no_data: v.is_none(),
        })
        .collect();
    fill_hr_avr(&mut s);
    s
}

fn bfs_components(cells: &BTreeSet<Mesh>) -> BTreeSet<Vec<Mesh>> {
    let mut seen = BTreeSet::new();
    let mut out = BTreeSet::new();
    for &start in cells {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(m) = queue.pop_front() {
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (r, c) = (m.row as i64 + dr, m.col as i64 + dc);
                    if r < 0 || c < 0 {
                        continue;
                    }
                    let n = Mesh::new(r as u32, c as u32);
                    if cells.contains(&n) && seen.insert(n) {
                        comp.push(n);
                        queue.push_back(n);
                    }
                }
            }
        }
        comp.sort();
        out.insert(comp);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn encode_parse_round_trip(ev in arb_event()) {
        let map = ColumnMap::default();
        let line = encode_record(&ev, &map).unwrap();
        prop_assert_eq!(parse_record(&line, 1, &map).unwrap(), ev);
    }

    #[test]
    fn parse_conserves_lines(events in proptest::collection::vec(arb_event(), 0..30), junk in proptest::collection::vec("[ -~]{0,40}", 0..10)) {
        let map = ColumnMap::default();
        let mut text = String::new();
        for ev in &events {
            text.push_str(&encode_record(ev, &map).unwrap());
            text.push('\n');
        }
        for j in &junk {
            text.push_str(j);
            text.push('\n');
        }
        let out = parse_catalog(text.as_bytes(), &map);
        prop_assert_eq!(out.events.len() + out.rejected.len(), out.lines);
        prop_assert_eq!(out.lines, events.len() + junk.len());
        prop_assert!(out.events.len() >= events.len());
    }

    #[test]
    fn filter_is_idempotent(events in proptest::collection::vec(arb_event(), 0..60)) {
        let f = CatalogFilter::default();
        let once = filter_events(&events, &f);
        prop_assert_eq!(filter_events(&once, &f), once.clone());
        prop_assert!(once.iter().all(|e| e.magnitude >= 2.0));
    }

    #[test]
    fn binning_matches_brute_tally_and_ignores_order(
        mut events in proptest::collection::vec(arb_map_event(), 0..200),
        seed in any::<u64>(),
    ) {
        let universe = Region::new(25.0, 125.0, 24.0, 24.0).unwrap();
        let spec = GridSpec::default();
        let windows = TimeWindow::tiling(Month::ym(1983, 1), Month::ym(1985, 12), WindowLength::Month);
        let binned = bin_events(&events, &universe, &spec, &windows).unwrap();

        let mut brute: BTreeMap<(Month, u32, u32), u32> = BTreeMap::new();
        for e in events.iter().filter(|e| e.magnitude >= 2.0) {
            let row = ((e.lat - 25.0) / 0.1 + 1e-9).floor() as u32;
            let col = ((e.lon - 125.0) / 0.1 + 1e-9).floor() as u32;
            *brute.entry((e.month(), row, col)).or_default() += 1;
        }
        let mut tallied = BTreeMap::new();
        for w in &binned {
            let total: u64 = w.counts.values().map(|&c| c as u64).sum();
            prop_assert_eq!(total, w.region_total);
            for (m, &c) in &w.counts {
                tallied.insert((w.window.start, m.row, m.col), c);
            }
        }
        prop_assert_eq!(tallied, brute);

        // a deterministic shuffle
        let n = events.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            events.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(bin_events(&events, &universe, &spec, &windows).unwrap(), binned);
    }

    #[test]
    fn cell_split_agrees_with_direct_mesh_index(events in proptest::collection::vec(arb_map_event(), 1..100)) {
        let layout = CellLayout::new(Region::new(25.0, 125.0, 24.0, 24.0).unwrap(), 4.0).unwrap();
        let spec = GridSpec::default();
        let window = TimeWindow { start: Month::ym(1983, 1), len: WindowLength::Month };
        let windows = TimeWindow::tiling(window.start, Month::ym(1985, 12), WindowLength::Month);
        let binned = bin_events(&events, &layout.universe, &spec, &windows).unwrap();
        for w in &binned {
            let per_cell = layout.split(w, &spec).unwrap();
            let sum: u64 = per_cell.iter().map(|c| c.region_total).sum();
            prop_assert_eq!(sum, w.region_total);
            for (cell, counts) in per_cell.iter().enumerate() {
                prop_assert_eq!(counts.universe_total, w.universe_total);
                let restricted = w.restrict(&layout.cells[cell], &spec).unwrap();
                prop_assert_eq!(&restricted.counts, &counts.counts);
            }
        }
        for e in events.iter().filter(|e| e.magnitude >= 2.0) {
            let cell = layout.cell_of(e.lat, e.lon).unwrap();
            prop_assert!(mesh_index(e.lat, e.lon, &layout.cells[cell], &spec).is_some());
        }
    }

    #[test]
    fn clustering_matches_bfs(cells in proptest::collection::btree_set((0u32..20, 0u32..20).prop_map(|(r, c)| Mesh::new(r, c)), 0..150), rot in 0usize..150) {
        let p = make_clusters(&cells);
        prop_assert_eq!(p.as_sets(), bfs_components(&cells));
        prop_assert_eq!(p.mesh_count(), cells.len());
        let mut order: Vec<Mesh> = cells.iter().copied().collect();
        order.reverse();
        if !order.is_empty() {
            let k = rot % order.len();
            order.rotate_left(k);
        }
        prop_assert_eq!(make_clusters_seeded(&cells, &order), p);
    }

    #[test]
    fn entropy_bounds(weights in proptest::collection::vec(0.0f64..10.0, 1..64), p_s in 0.001f64..=1.0) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let h = entropy_h(&p).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
        let hr = resi(h, p_s).unwrap();
        prop_assert!(hr >= h);
    }

    #[test]
    fn ri_sums_to_one(counts in proptest::collection::vec(proptest::collection::vec(0u32..20, 24), 36)) {
        let layout = CellLayout::new(Region::new(25.0, 125.0, 24.0, 24.0).unwrap(), 4.0).unwrap();
        let c = CellCounts::new(Month::ym(1983, 1), counts).unwrap();
        if let Some(ri) = ri_index(&c, &layout, &RiConfig::default(), Month::ym(1984, 12)) {
            let sum: f64 = ri.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(ri.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn pi_is_centred_and_shift_invariant(
        counts in proptest::collection::vec(proptest::collection::vec(0u32..15, 72), 2..8),
        shift in 1u32..5,
    ) {
        let cfg = PiConfig::default();
        let t = Month::ym(1988, 6);
        let base = CellCounts::new(Month::ym(1983, 1), counts.clone()).unwrap();
        let shifted = CellCounts::new(
            Month::ym(1983, 1),
            counts.iter().map(|row| row.iter().map(|c| c + shift).collect()).collect(),
        ).unwrap();
        let a = pi_index(&base, &cfg, t).unwrap();
        let b = pi_index(&shifted, &cfg, t).unwrap();
        prop_assert!(a.iter().sum::<f64>().abs() < 1e-9);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn prec_delay_are_fractions_and_local(
        f in proptest::collection::vec(any::<bool>(), 120),
        g in proptest::collection::vec(any::<bool>(), 120),
        dt in 1usize..=36,
        noise in proptest::collection::vec(any::<bool>(), 120),
    ) {
        let (ts, te) = (10usize, 100usize);
        let p = prec(&f, &g, ts, te, dt);
        let d = delay(&g, &f, ts, te, dt);
        for v in [p, d].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // values outside [ts, te] do not matter
        let mut f2 = f.clone();
        let mut g2 = g.clone();
        for k in (0..ts).chain(te + 1..120) {
            f2[k] = noise[k];
            g2[k] = !noise[k];
        }
        prop_assert_eq!(prec(&f2, &g2, ts, te, dt), p);
        prop_assert_eq!(delay(&g2, &f2, ts, te, dt), d);
    }

    #[test]
    fn prec_grows_with_horizon_on_a_fixed_range(
        f in proptest::collection::vec(any::<bool>(), 140),
        g in proptest::collection::vec(any::<bool>(), 140),
    ) {
        // t runs over [0, 100] for every Δt
        let mut last = 0.0;
        for dt in 1..=36 {
            if let Some(p) = prec(&f, &g, 0, 100 + dt, dt) {
                prop_assert!(p >= last);
                last = p;
            }
        }
    }

    #[test]
    fn entropy_ignores_order(weights in proptest::collection::vec(0.0f64..10.0, 1..40), rot in 0usize..40) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 0.0);
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut q = p.clone();
        q.reverse();
        let k = rot % q.len();
        q.rotate_left(k);
        prop_assert!((entropy_h(&p).unwrap() - entropy_h(&q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hr_sat_is_zero_or_hr(hr in proptest::collection::vec(proptest::option::weighted(0.9, 0.0f64..4.0), 60..200)) {
        let series = monthly_series(&hr);
        for (p, v) in series.iter().zip(hr_sat_series(&series, &AlarmConfig::default())) {
            prop_assert!(v == 0.0 || v == p.hr);
        }
    }

    #[test]
    fn loose_thresholds_alarm_everywhere(hr in proptest::collection::vec(0.01f64..4.0, 40..120)) {
        let cfg = AlarmConfig { gamma: 1.0, theta_std: 1e9, rank_units: RankUnits::Samples, ..AlarmConfig::default() };
        let series = monthly_series(&hr.iter().map(|&v| Some(v)).collect::<Vec<_>>());
        let sat = hr_sat_series(&series, &cfg);
        for (k, p) in series.iter().enumerate() {
            if p.window.start >= cfg.first_alarm_month() && k >= cfg.dt_months as usize {
                prop_assert_eq!(sat[k], p.hr);
            }
        }
    }

    #[test]
    fn activity_bounds_and_growth(mags in proptest::collection::vec(-1.0f64..8.0, 1..30), extra in -1.0f64..8.0) {
        let a = activity(&mags).unwrap();
        let max = mags.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a >= max - 1e-12);
        let mut more = mags.clone();
        more.push(extra);
        prop_assert!(activity(&more).unwrap() >= a - 1e-12);
    }

    #[test]
    fn high_activity_is_a_strict_two_year_maximum(a in proptest::collection::vec(proptest::option::weighted(0.8, 0.0f64..6.0), 1..120)) {
        let high = high_activity(&a, 1);
        let defined: Vec<f64> = a.iter().flatten().copied().collect();
        let n = defined.len().max(1) as f64;
        let mean = defined.iter().sum::<f64>() / n;
        let sd = (defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        for (k, &h) in high.iter().enumerate() {
            let want = match a[k] {
                Some(v) => v > mean + sd && a[k.saturating_sub(24)..k].iter().flatten().all(|p| *p < v),
                None => false,
            };
            prop_assert_eq!(h, want);
        }
    }
}
