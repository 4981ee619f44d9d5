//! Deterministic synthetic test feeders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Branch, Bus, BusKind, Feeder, FeederName, ImpedanceUnit};

const FT_PER_MILE: f64 = 5280.0;

/// Returns one of the four bundled synthetic feeders.
pub fn bundled_feeder(name: FeederName) -> Feeder {
    match name {
        FeederName::Ieee34Like => ieee34_like(),
        FeederName::SingleFeeder => single_feeder(),
        FeederName::TwoFeeder => two_feeder(),
        FeederName::Dedicated => dedicated(),
    }
}

struct Builder {
    base_kv: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
}

impl Builder {
    fn new(slack: &str, base_kv: f64) -> Self {
        Builder {
            base_kv,
            buses: vec![Bus {
                id: slack.to_string(),
                kind: BusKind::Slack,
                base_kv,
                load_connection: false,
                peak_kw: 0.0,
            }],
            branches: Vec::new(),
        }
    }

    fn line(&mut self, from: &str, to: &str, r: f64, x: f64) {
        self.buses.push(Bus {
            id: to.to_string(),
            kind: BusKind::Load,
            base_kv: self.base_kv,
            load_connection: true,
            peak_kw: 0.0,
        });
        self.branches.push(Branch {
            from: from.to_string(),
            to: to.to_string(),
            r,
            x,
        });
    }

    fn set_peak(&mut self, id: &str, kw: f64) {
        let bus = self
            .buses
            .iter_mut()
            .find(|b| b.id == id)
            .expect("bus exists");
        bus.peak_kw = kw;
    }

    /// Rescales attached peaks so they sum to `target_kw`.
    fn calibrate_peaks(&mut self, target_kw: f64) {
        let total: f64 = self.buses.iter().map(|b| b.peak_kw).sum();
        for b in &mut self.buses {
            b.peak_kw *= target_kw / total;
        }
    }

    fn finish(self, name: &str, notes: &str) -> Feeder {
        Feeder {
            name: name.to_string(),
            base_power_mva: 10.0,
            buses: self.buses,
            branches: self.branches,
            impedance_unit: ImpedanceUnit::Ohm,
            notes: Some(notes.to_string()),
        }
    }
}

// IEEE 34-bus topology and segment lengths (ft), balanced and without
// regulators. Lateral segments use a lighter conductor.
const IEEE34_SEGMENTS: [(&str, &str, f64, bool); 33] = [
    ("800", "802", 2580.0, false),
    ("802", "806", 1730.0, false),
    ("806", "808", 32230.0, false),
    ("808", "810", 5804.0, true),
    ("808", "812", 37500.0, false),
    ("812", "814", 29730.0, false),
    ("814", "850", 10.0, false),
    ("850", "816", 310.0, false),
    ("816", "818", 1710.0, true),
    ("818", "820", 48150.0, true),
    ("820", "822", 13740.0, true),
    ("816", "824", 10210.0, false),
    ("824", "826", 3030.0, true),
    ("824", "828", 840.0, false),
    ("828", "830", 20440.0, false),
    ("830", "854", 520.0, false),
    ("854", "856", 23330.0, true),
    ("854", "852", 36830.0, false),
    ("852", "832", 10.0, false),
    ("832", "888", 500.0, true),
    ("888", "890", 10560.0, true),
    ("832", "858", 4900.0, false),
    ("858", "864", 1620.0, true),
    ("858", "834", 5830.0, false),
    ("834", "842", 280.0, false),
    ("842", "844", 1350.0, false),
    ("844", "846", 3640.0, false),
    ("846", "848", 530.0, false),
    ("834", "860", 2020.0, false),
    ("860", "836", 2680.0, false),
    ("836", "840", 860.0, false),
    ("836", "862", 280.0, true),
    ("862", "838", 4860.0, true),
];

// Spot and distributed loads lumped at the downstream bus, kW.
const IEEE34_LOADS: [(&str, f64); 20] = [
    ("806", 55.0),
    ("810", 16.0),
    ("820", 34.0),
    ("822", 135.0),
    ("824", 5.0),
    ("826", 40.0),
    ("828", 4.0),
    ("830", 52.0),
    ("856", 4.0),
    ("858", 15.0),
    ("864", 2.0),
    ("834", 32.0),
    ("860", 234.0),
    ("836", 82.0),
    ("840", 74.0),
    ("838", 28.0),
    ("844", 414.0),
    ("846", 45.0),
    ("848", 83.0),
    ("890", 450.0),
];

fn ieee34_like() -> Feeder {
    // ohm per mile
    let (main_r, main_x) = (0.20, 0.36);
    let (lat_r, lat_x) = (0.55, 0.80);
    let mut b = Builder::new("800", 24.9);
    for (from, to, ft, lateral) in IEEE34_SEGMENTS {
        let miles = ft / FT_PER_MILE;
        let (r, x) = if lateral {
            (lat_r, lat_x)
        } else {
            (main_r, main_x)
        };
        b.line(from, to, r * miles, x * miles);
    }
    for (bus, kw) in IEEE34_LOADS {
        b.set_peak(bus, kw);
    }
    b.calibrate_peaks(1800.0);
    b.finish(
        "ieee34_like",
        "IEEE 34-bus topology, balanced single-phase equivalent, regulators removed; 1.8 MW peak",
    )
}

/// One long main line with short laterals hanging off every main bus.
/// Returns (main bus ids, lateral bus ids).
fn grow_feeder(
    b: &mut Builder,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    head: &str,
    main_buses: usize,
    main_z: (f64, f64),
    lat_z: (f64, f64),
) -> (Vec<String>, Vec<String>) {
    let mut mains = Vec::new();
    let mut laterals = Vec::new();
    let mut prev = head.to_string();
    for k in 1..=main_buses {
        let id = format!("{prefix}M{k:02}");
        let km: f64 = rng.random_range(0.20..0.30);
        b.line(&prev, &id, main_z.0 * km, main_z.1 * km);
        let lat_len = rng.random_range(1..=3usize);
        let mut lat_prev = id.clone();
        for l in 1..=lat_len {
            let lid = format!("{id}L{l}");
            let km: f64 = rng.random_range(0.15..0.40);
            b.line(&lat_prev, &lid, lat_z.0 * km, lat_z.1 * km);
            laterals.push(lid.clone());
            lat_prev = lid;
        }
        mains.push(id.clone());
        prev = id;
    }
    (mains, laterals)
}

fn populate_loads(b: &mut Builder, rng: &mut ChaCha8Rng, mains: &[String], laterals: &[String]) {
    for id in laterals {
        let w: f64 = rng.random_range(0.5..1.5);
        b.set_peak(id, w);
    }
    for id in mains.iter().skip(1).step_by(2) {
        let w: f64 = rng.random_range(0.5..1.5);
        b.set_peak(id, w);
    }
}

fn single_feeder_topology() -> Builder {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut b = Builder::new("SUB", 12.47);
    // ohm per km: trunk and lateral conductors
    let (mains, laterals) =
        grow_feeder(&mut b, &mut rng, "", "SUB", 40, (0.143, 0.26), (0.35, 0.40));
    populate_loads(&mut b, &mut rng, &mains, &laterals);
    b
}

fn single_feeder() -> Feeder {
    let mut b = single_feeder_topology();
    b.calibrate_peaks(5000.0);
    b.finish(
        "single_feeder",
        "synthetic single-feeder analog scaled to ~120 buses (long main line plus laterals); 5 MW peak",
    )
}

fn dedicated() -> Feeder {
    let mut b = single_feeder_topology();
    for bus in &mut b.buses {
        bus.peak_kw = 0.0;
    }
    b.finish(
        "dedicated",
        "single-feeder analog topology with all system loads removed",
    )
}

fn two_feeder() -> Feeder {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut b = Builder::new("SRC", 12.47);
    // substation transformer shared by both feeders, as a series impedance
    let z_base = 12.47 * 12.47 / 10.0;
    b.line("SRC", "SUB", 0.003 * z_base, 0.03 * z_base);
    let (ma, la) = grow_feeder(&mut b, &mut rng, "A", "SUB", 30, (0.11, 0.20), (0.35, 0.40));
    let (mb, lb) = grow_feeder(&mut b, &mut rng, "B", "SUB", 28, (0.11, 0.20), (0.35, 0.40));
    populate_loads(&mut b, &mut rng, &ma, &la);
    populate_loads(&mut b, &mut rng, &mb, &lb);
    b.set_peak("SUB", 0.0);
    b.buses
        .iter_mut()
        .find(|x| x.id == "SUB")
        .unwrap()
        .load_connection = false;
    b.calibrate_peaks(6000.0);
    b.finish(
        "two_feeder",
        "two synthetic radial feeders behind one shared substation transformer; 6 MW combined peak",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    #[test]
    fn ieee34_has_34_buses_and_peak() {
        let f = bundled_feeder(FeederName::Ieee34Like);
        assert_eq!(f.buses.len(), 34);
        assert_eq!(f.branches.len(), 33);
        assert!((f.total_peak_kw() - 1800.0).abs() < 18.0);
        assert_eq!(f.load_buses().count(), 20);
    }

    #[test]
    fn calibrated_peaks() {
        let s = bundled_feeder(FeederName::SingleFeeder);
        assert!((s.total_peak_kw() - 5000.0).abs() < 1e-6);
        assert!((100..=140).contains(&s.buses.len()));
        let t = bundled_feeder(FeederName::TwoFeeder);
        assert!((t.total_peak_kw() - 6000.0).abs() < 1e-6);
    }

    #[test]
    fn dedicated_has_no_system_load() {
        let d = bundled_feeder(FeederName::Dedicated);
        assert_eq!(d.load_buses().count(), 0);
        assert!(!d.eligible_buses().is_empty());
        let s = bundled_feeder(FeederName::SingleFeeder);
        assert_eq!(d.branches, s.branches);
    }

    #[test]
    fn two_feeder_joins_two_subtrees_at_substation() {
        let f = bundled_feeder(FeederName::TwoFeeder);
        let order = f.validate_radial().unwrap();
        let sub = f.bus_index("SUB").unwrap();
        let children: Vec<usize> = (0..f.buses.len())
            .filter(|&i| order.parent[i] == Some(sub))
            .collect();
        assert_eq!(children.len(), 2);
        assert_eq!(order.parent[sub], f.slack_index());
    }

    #[test]
    fn radiality_edge_count() {
        for name in FeederName::ALL {
            let f = bundled_feeder(name);
            assert_eq!(f.branches.len(), f.buses.len() - 1, "{name}");
            f.validate_radial().unwrap();
        }
    }

    #[test]
    fn deterministic_serialization() {
        for name in FeederName::ALL {
            assert_eq!(
                bundled_feeder(name).to_json().unwrap(),
                bundled_feeder(name).to_json().unwrap()
            );
        }
    }

    /// Independent BFS: every bus must come after all of its children.
    #[test]
    fn ieee34_sweep_order_children_first() {
        let f = bundled_feeder(FeederName::Ieee34Like);
        let order = f.validate_radial().unwrap();
        assert_eq!(f.buses[order.slack()].id, "800");

        let n = f.buses.len();
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let root = f.slack_index().unwrap();
        seen[root] = true;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for br in &f.branches {
                let (a, c) = (f.bus_index(&br.from).unwrap(), f.bus_index(&br.to).unwrap());
                for (x, y) in [(a, c), (c, a)] {
                    if x == u && !seen[y] {
                        seen[y] = true;
                        parent[y] = u;
                        q.push_back(y);
                    }
                }
            }
        }
        let pos: Vec<usize> = {
            let mut p = vec![0; n];
            for (k, &b) in order.order.iter().enumerate() {
                p[b] = k;
            }
            p
        };
        for b in 0..n {
            if b != root {
                assert!(pos[b] < pos[parent[b]]);
            }
        }
    }
}
