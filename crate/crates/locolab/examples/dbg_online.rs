//! Scratch probe for the online protocol (debugging aid).
fn main() {
    let minutes: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20.0);
    let seed: u64 = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(6);
    let gamma: f64 = std::env::args().nth(3).and_then(|a| a.parse().ok()).unwrap_or(0.998);
    let mut cfg = locolab::harness::TrainConfig {
        robot: locolab::sim::RobotKind::Quadruped,
        gait: "trot".into(),
        seed,
        ..Default::default()
    };

    let proto = locolab::harness::OnlineProtocolConfig {
        total_duration_s: minutes * 60.0,
        gamma,
        ..Default::default()
    };
    let out = locolab::harness::online_protocol(&cfg, &proto).unwrap();
    println!(
        "seed {seed}: episodes {} falls {} repositions {} rate {:.3} start {:.2} end {:.2}",
        out.episodes,
        out.falls,
        out.repositions,
        out.fall_rate(),
        out.edge_reward(11, false),
        out.edge_reward(11, true)
    );
    let n = out.log.rows.len();
    for (i, r) in out.log.rows.iter().enumerate() {
        if i < 5 || i % 25 == 0 || i + 3 > n {
            println!("ep {} len {} reward {:.1}", r.iteration, r.mean_episode_length, r.mean_episode_reward);
        }
    }
}
