//! Per-episode CSV export.

use std::io::Write;

use crate::game::GameSpec;
use crate::sim::episode::EpisodeResult;

/// Write the per-episode table:
/// `episode,state,a_action,b_action,front_run,payoff_a,payoff_b,fees_a,fees_b`.
pub fn write_episode_csv<W: Write>(
    spec: &GameSpec,
    episodes: &[EpisodeResult],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "episode,state,a_action,b_action,front_run,payoff_a,payoff_b,fees_a,fees_b"
    )?;
    for e in episodes {
        let a = e
            .a_action
            .map(|m| spec.message_label(m).to_string())
            .unwrap_or_default();
        let b = e
            .b_action
            .map(|m| spec.message_label(m).to_string())
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            e.episode,
            spec.state_label(e.state),
            a,
            b,
            e.front_run,
            e.payoff_a,
            e.payoff_b,
            e.fees_a,
            e.fees_b
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_monte_carlo_full, ScenarioConfig};

    #[test]
    fn csv_has_header_and_one_line_per_episode() {
        let cfg = ScenarioConfig::from_json(
            r#"{
            "game": {
                "states": ["s1", "s2"],
                "messages": ["m1", "m2"],
                "prior": [0.5, 0.5],
                "payoff_a": [[10.0, 0.0], [0.0, 10.0]],
                "payoff_b": [
                    [[8.0, 0.0], [0.0, 0.0]],
                    [[0.0, 0.0], [0.0, 8.0]]
                ],
                "costs": {"c": 1.0, "f": 2.0, "q": 0.5, "beta": 0.9}
            },
            "episodes": 5,
            "seed": 3
        }"#,
        )
        .unwrap();
        let (_, episodes) = run_monte_carlo_full(&cfg).unwrap();
        let spec = cfg.game_spec().unwrap();
        let mut buf = Vec::new();
        write_episode_csv(&spec, &episodes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(
            lines[0],
            "episode,state,a_action,b_action,front_run,payoff_a,payoff_b,fees_a,fees_b"
        );
        assert!(lines[1].starts_with("0,s"));
    }
}
