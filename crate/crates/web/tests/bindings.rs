use shrinklab_web::{hits_json, orbit_json, towers_json};

#[test]
fn golden_orbit_has_at_most_three_gaps() {
    let v = orbit_json("golden:30", "1/7", 200).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 201);
    let gaps = v["distinct_gaps"].as_array().unwrap().len();
    assert!((1..=3).contains(&gaps), "{gaps} distinct gaps");
}

#[test]
fn orbit_rejects_past_horizon() {
    // 13/21 has horizon 10
    assert!(orbit_json("alpha:13/21", "0", 10).is_err());
    assert!(orbit_json("alpha:13/21", "0", 9).is_ok());
}

#[test]
fn hits_rows_follow_checkpoints() {
    let v = hits_json("golden:40", "harmonic:1/2", "1/2", "1/3", "10,100,1000").unwrap();
    let rows = v["rows"].as_array().unwrap();
    let ns: Vec<u64> = rows.iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, [10, 100, 1000]);
    let hits: Vec<u64> = rows.iter().map(|r| r["hits"].as_u64().unwrap()).collect();
    assert!(hits.windows(2).all(|w| w[0] <= w[1]));
    assert!(hits_json("golden:40", "table:@/etc/passwd", "1/2", "1/3", "10").is_err());
}

#[test]
fn towers_partition_the_circle() {
    let v = towers_json("golden:30", 10).unwrap();
    assert_eq!(v["check"]["partition"], true);
    let mass: f64 = v["towers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["width"].as_f64().unwrap() * t["height"].as_f64().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-9);
}
