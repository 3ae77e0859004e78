use chrono::{DateTime, Duration, TimeZone, Utc};
use fleet_anomaly::geo::{offset_equirectangular, GeoPoint};
use fleet_anomaly::ingest::{
    build_panel, clean, interpolate_hourly, parse_pings, write_pings_csv, BBox, CleanConfig, VesselPing,
};
use proptest::prelude::*;

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 2, 1, 0, 0, 0).unwrap()
}

/// Tracks as (minutes between pings, east step km, north step km) per ping.
type Steps = Vec<(i64, f64, f64)>;

fn fleet() -> impl Strategy<Value = Vec<Steps>> {
    let step = (10i64..300, -60.0f64..60.0, -60.0f64..60.0);
    prop::collection::vec(prop::collection::vec(step, 1..40), 1..6)
}

fn pings(tracks: &[Steps]) -> Vec<VesselPing> {
    let mut out = Vec::new();
    for (v, steps) in tracks.iter().enumerate() {
        let mut t = t0();
        let mut p = GeoPoint {
            lat: -43.0 + v as f64 * 0.3,
            lon: -61.0,
        };
        for &(mins, e, n) in steps {
            t += Duration::minutes(mins);
            p = offset_equirectangular(p, e, n);
            out.push(VesselPing {
                vessel_id: format!("{}", 100 + v),
                timestamp: t,
                position: p,
                speed_kmh: None,
            });
        }
    }
    out
}

fn fixed_cutoff() -> CleanConfig {
    CleanConfig {
        speed_cutoff_kmh: Some(40.0),
        bbox: Some(BBox {
            min_lat: -44.0,
            max_lat: -41.0,
            min_lon: -64.0,
            max_lon: -58.0,
        }),
        ..CleanConfig::default()
    }
}

fn key(p: &VesselPing) -> (String, DateTime<Utc>, u64, u64) {
    (p.vessel_id.clone(), p.timestamp, p.position.lat.to_bits(), p.position.lon.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn clean_is_idempotent_with_a_fixed_cutoff(tracks in fleet()) {
        let cfg = fixed_cutoff();
        let (once, _) = clean(&pings(&tracks), &cfg).unwrap();
        let (twice, report) = clean(&once, &cfg).unwrap();
        prop_assert_eq!(report.total_removed(), 0);
        prop_assert_eq!(
            once.iter().map(key).collect::<Vec<_>>(),
            twice.iter().map(key).collect::<Vec<_>>()
        );
    }

    #[test]
    fn report_reconciles(tracks in fleet(), pct in 0.5f64..0.999) {
        let input = pings(&tracks);
        for cfg in [fixed_cutoff(), CleanConfig { speed_cutoff_kmh: None, speed_percentile: Some(pct), ..fixed_cutoff() }] {
            let (out, r) = clean(&input, &cfg).unwrap();
            prop_assert!(r.reconciles());
            prop_assert_eq!(r.input_pings, input.len());
            prop_assert_eq!(r.surviving_pings, out.len());
            prop_assert_eq!(
                r.removed_outside_window + r.removed_shore + r.removed_speed + r.removed_mobility,
                input.len() - out.len()
            );
        }
    }

    #[test]
    fn survivors_respect_the_speed_cutoff(tracks in fleet()) {
        let (out, r) = clean(&pings(&tracks), &fixed_cutoff()).unwrap();
        for p in &out {
            prop_assert!(p.speed_kmh.is_none_or(|s| s <= r.speed_cutoff_kmh + 1e-9));
        }
    }

    #[test]
    fn interpolation_stays_in_the_bracketing_range(tracks in fleet()) {
        let all = pings(&tracks);
        let track: Vec<VesselPing> = all.iter().filter(|p| p.vessel_id == "100").cloned().collect();
        prop_assume!(track.len() >= 2);
        let hours: Vec<DateTime<Utc>> = (0..300).map(|h| t0() + Duration::hours(h)).collect();
        let (pos, present) = interpolate_hourly(&track, &hours, 24.0);
        for (h, &t) in hours.iter().enumerate() {
            if !present[h] {
                continue;
            }
            let after = track.partition_point(|p| p.timestamp < t);
            let (a, b) = if track[after.min(track.len() - 1)].timestamp == t {
                (&track[after], &track[after])
            } else {
                (&track[after - 1], &track[after])
            };
            let (lo, hi) = (a.position.lat.min(b.position.lat), a.position.lat.max(b.position.lat));
            prop_assert!(pos[h].lat >= lo - 1e-12 && pos[h].lat <= hi + 1e-12);
            let (lo, hi) = (a.position.lon.min(b.position.lon), a.position.lon.max(b.position.lon));
            prop_assert!(pos[h].lon >= lo - 1e-12 && pos[h].lon <= hi + 1e-12);
        }
    }

    #[test]
    fn csv_round_trip(tracks in fleet()) {
        let input = pings(&tracks);
        let mut buf = Vec::new();
        write_pings_csv(&mut buf, &input).unwrap();
        let back = parse_pings(buf.as_slice()).unwrap();
        prop_assert!(back.errors.is_empty());
        prop_assert_eq!(back.pings.len(), input.len());
        for (a, b) in back.pings.iter().zip(&input) {
            prop_assert_eq!(&a.vessel_id, &b.vessel_id);
            prop_assert_eq!(a.timestamp, b.timestamp);
            prop_assert!((a.position.lat - b.position.lat).abs() < 1e-9);
            prop_assert!((a.position.lon - b.position.lon).abs() < 1e-9);
        }
    }
}

#[test]
fn panel_shape_follows_the_time_window() {
    let tracks: Vec<Steps> = (0..4).map(|_| vec![(60, 5.0, 2.0); 72]).collect();
    let cfg = CleanConfig {
        time_window: Some(fleet_anomaly::ingest::TimeWindow {
            start: t0(),
            end: t0() + Duration::hours(47),
        }),
        ..CleanConfig::default()
    };
    let (cleaned, _) = clean(&pings(&tracks), &cfg).unwrap();
    let panel = build_panel(&cleaned, &cfg).unwrap();
    assert_eq!(panel.n_vessels(), 4);
    assert_eq!(panel.n_hours(), 48);
    assert_eq!(panel.start_hour(), t0());
    // First ping lands at 01:00, so hour 0 is absent and every later hour present.
    for v in 0..4 {
        assert!(!panel.is_present(v, 0));
        assert!((1..48).all(|h| panel.is_present(v, h)));
    }
}
