use arn_core::world::load_map;
use proptest::prelude::*;
use serde_json::json;

/// A row of rooms separated by wall columns, each pair linked by one door.
fn strip() -> impl Strategy<Value = String> {
    (2usize..6, 1u16..4)
        .prop_flat_map(|(k, h)| {
            (
                Just(h),
                prop::collection::vec(1u16..4, k),
                prop::collection::vec((0u16..h, any::<bool>(), 1u32..60, any::<bool>()), k - 1),
                prop::collection::vec((0u16..4, 0u16..h), k),
                0..k,
            )
        })
        .prop_map(|(h, widths, doors, stations, base)| {
            let mut x = 0;
            let mut rooms = serde_json::Map::new();
            let mut door_json = Vec::new();
            let mut station_json = Vec::new();
            for (i, &w) in widths.iter().enumerate() {
                let cells: Vec<[u16; 2]> = (0..h)
                    .flat_map(|y| (x..x + w).map(move |cx| [cx, y]))
                    .collect();
                rooms.insert(format!("R{i}"), json!(cells));
                let (sx, sy) = stations[i];
                station_json.push(json!({
                    "id": format!("S{i}"),
                    "cell": [x + sx % w, sy],
                    "object": (i % 2 == 1).then(|| format!("O{i}")),
                }));
                x += w;
                if let Some(&(row, human, delay, open)) = doors.get(i) {
                    door_json.push(json!({
                        "id": format!("d{i}"),
                        "cell": [x, row],
                        "connects": [format!("R{i}"), format!("R{}", i + 1)],
                        "kind": if human { "human_operated" } else { "robot_openable" },
                        "close_delay_s": delay,
                        "open": open,
                    }));
                    x += 1;
                }
            }
            json!({
                "width": x, "height": h,
                "rooms": rooms,
                "doors": door_json,
                "stations": station_json,
                "base_station": format!("S{base}"),
            })
            .to_string()
        })
}

proptest! {
    #[test]
    fn map_json_round_trips(text in strip()) {
        let m = load_map(&text).unwrap();
        let again = load_map(&m.to_json()).unwrap();
        prop_assert_eq!(&again, &m);
        prop_assert_eq!(again.to_json(), m.to_json());
    }

    #[test]
    fn door_between_is_symmetric(text in strip()) {
        let m = load_map(&text).unwrap();
        for a in m.rooms() {
            for b in m.rooms() {
                let ab = m.door_between(a.id, b.id).unwrap().map(|d| d.id);
                let ba = m.door_between(b.id, a.id).unwrap().map(|d| d.id);
                prop_assert_eq!(ab, ba);
                // Adjacent rooms in the strip share a door; no others do.
                let adjacent = a.name[1..].parse::<i32>().unwrap().abs_diff(b.name[1..].parse::<i32>().unwrap()) == 1;
                prop_assert_eq!(ab.is_some(), adjacent);
            }
        }
    }

    #[test]
    fn room_distance_is_symmetric(text in strip()) {
        let m = load_map(&text).unwrap();
        for r in m.rooms() {
            for &p in &r.cells {
                for &q in &r.cells {
                    prop_assert_eq!(m.room_distance(p, q), m.room_distance(q, p));
                    prop_assert!(m.room_distance(p, q).unwrap() >= p.manhattan(q));
                }
            }
        }
    }
}
