use fbga::*;

#[test]
fn gen_fixtures() {
    // Two-corner 300 m horizon: fast right-hander into a wider left.
    let segs = [
        TrackSegment::Straight { length: 60.0 },
        TrackSegment::Clothoid { length: 25.0 },
        TrackSegment::Arc { radius: -45.0, length: 55.0 },
        TrackSegment::Clothoid { length: 25.0 },
        TrackSegment::Straight { length: 20.0 },
        TrackSegment::Clothoid { length: 20.0 },
        TrackSegment::Arc { radius: 70.0, length: 45.0 },
        TrackSegment::Clothoid { length: 20.0 },
        TrackSegment::Straight { length: 30.0 },
    ];
    let p = synth_track(&segs, 1.0).unwrap();
    write_path(&p, "../../data/two_corner_300m.csv").unwrap();
    println!("two_corner nodes={} len={}", p.len(), p.total_length());

    // Spline-grid envelope sampled from a drooping superellipse with a
    // mild traction dent at zero lateral (car-with-traction-limit shape).
    let v_breaks: Vec<f64> = vec![0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0];
    let ay_norm: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    let ay_cap = |v: f64| 13.0 * (1.0 - 0.12 * (v / 90.0f64).powi(2));
    let mut ax_min = Vec::new();
    let mut ax_max = Vec::new();
    let mut ay_min = Vec::new();
    let mut ay_max = Vec::new();
    for &v in &v_breaks {
        let cap = ay_cap(v);
        ay_min.push(-(cap * 1000.0).round() / 1000.0);
        ay_max.push((cap * 1000.0).round() / 1000.0);
        let mut row_min = Vec::new();
        let mut row_max = Vec::new();
        for &eta in &ay_norm {
            let r = eta.abs();
            let shape = (1.0 - r.powf(2.0)).max(0.0).sqrt();
            let drag = 0.0007 * v * v;
            let acc = (6.8 * shape).min(4.2 + 3.2 * r * r) - drag;
            let brake = 12.5 * shape + drag;
            row_max.push((acc * 1000.0).round() / 1000.0);
            row_min.push((-brake * 1000.0).round() / 1000.0);
        }
        ax_min.push(row_min);
        ax_max.push(row_max);
    }
    let grid = serde_json::json!({
        "type": "spline_grid",
        "v_max": 90.0,
        "v_breaks": v_breaks,
        "ay_norm_breaks": ay_norm,
        "ax_min": ax_min,
        "ax_max": ax_max,
        "ay_min": ay_min,
        "ay_max": ay_max,
    });
    std::fs::write(
        "../../data/spline_grid_car.json",
        serde_json::to_string_pretty(&grid).unwrap(),
    )
    .unwrap();
    // Validate it loads.
    let env = GgvEnvelope::load("../../data/spline_grid_car.json").unwrap();
    println!("grid v_max={} latbounds@30={:?}", env.v_max(), env.lateral_bounds(30.0));
}
