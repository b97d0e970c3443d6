use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soc::env::{AgentState, Maze};
use soc::harness::{self, behavior_map, fitness_map};
use soc::learner::{Learner, LearnerParams, Mode};
use soc::pool::Pool;
use soc::som::{CellCoord, SomGrid};
use soc::Vec2;

fn dist(a: Vec2, b: Vec2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

proptest! {
    #[test]
    fn pool_census_tracks_references(ops in prop::collection::vec((0u8..3, 0usize..64), 1..400)) {
        let mut pool = Pool::new();
        let mut held = Vec::new();
        for (op, pick) in ops {
            match op {
                0 => {
                    let id = pool.create_macro([0.1, -0.1]).unwrap();
                    pool.acquire_index(id).unwrap();
                    held.push(id);
                }
                1 if !held.is_empty() => {
                    let id = held[pick % held.len()];
                    pool.acquire_index(id).unwrap();
                    held.push(id);
                }
                _ if !held.is_empty() => {
                    let id = held.swap_remove(pick % held.len());
                    pool.release_index(id).unwrap();
                }
                _ => {}
            }
            let (macros, micro) = pool.census();
            prop_assert_eq!(micro, held.len() as u64);
            let mut distinct = held.clone();
            distinct.sort();
            distinct.dedup();
            prop_assert_eq!(macros, distinct.len());
        }
    }

    #[test]
    fn som_update_contracts_toward_input(
        seed in any::<u64>(),
        x in 0.0f64..10.0,
        y in 0.0f64..10.0,
        it in 0u64..5_000_000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grid = SomGrid::random(10, 10, &mut rng);
        grid.set_iteration(it);
        let before = grid.clone();
        let winner = grid.winner([x, y]);
        let updated = grid.update([x, y], winner);
        let radius = SomGrid::update_radius(it);
        for r in 0..10 {
            for c in 0..10 {
                let cell = CellCoord::new(r, c);
                let in_ball = radius.is_some_and(|d| cell.chebyshev(winner) <= d);
                prop_assert_eq!(updated.contains(&cell), in_ball);
                if in_ball {
                    prop_assert!(dist(grid.weight(cell), [x, y]) < dist(before.weight(cell), [x, y])
                        || before.weight(cell) == [x, y]);
                } else {
                    prop_assert_eq!(grid.weight(cell), before.weight(cell));
                }
            }
        }
        prop_assert_eq!(grid.iteration(), it + 1);
    }

    #[test]
    fn env_step_invariants(
        px in 0.0f64..=10.0,
        py in 0.0f64..=10.0,
        ax in -3.0f64..3.0,
        ay in -3.0f64..3.0,
    ) {
        let maze = Maze::one_wall();
        prop_assume!(!maze.in_wall([px, py]));
        let start = AgentState { position: [px, py] };
        let t = maze.step(start, [ax, ay]);
        let p = t.state.position;
        prop_assert!((0.0..=10.0).contains(&p[0]) && (0.0..=10.0).contains(&p[1]));
        prop_assert!((p[0] - px).abs() <= 1.0 + 1e-12 && (p[1] - py).abs() <= 1.0 + 1e-12);
        prop_assert!(!maze.in_wall(p));
        prop_assert!([1000.0, -20.0, -10.0].contains(&t.reward));
        prop_assert_eq!(t.terminal, t.reward == 1000.0);
        if t.reward == -20.0 {
            prop_assert_eq!(t.state, start);
        }
    }

    #[test]
    fn maze_text_round_trips(cells in prop::collection::vec(prop::bool::weighted(0.3), 12), goal in 0usize..12) {
        // 4 x 3 grid; walls from `cells`, one goal
        let mut text = String::new();
        for row in 0..3 {
            for col in 0..4 {
                let i = row * 4 + col;
                text.push(if i == goal { 'G' } else if cells[i] { '#' } else { '.' });
            }
            text.push('\n');
        }
        match Maze::parse(&text) {
            Ok(maze) => prop_assert_eq!(maze.to_string(), text),
            Err(e) => prop_assert_eq!(e, soc::MazeError::NoFreeCell),
        }
    }
}

#[test]
fn som_tiles_input_range_from_unit_square_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut grid = SomGrid::random(10, 10, &mut rng);
    for _ in 0..50_000 {
        let p = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
        let w = grid.winner(p);
        grid.update(p, w);
    }
    for w in grid.weights() {
        assert!(
            (0.0..=10.0).contains(&w[0]) && (0.0..=10.0).contains(&w[1]),
            "{w:?}"
        );
    }
    let n = 10_000;
    let err: f64 = (0..n)
        .map(|_| {
            let p = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
            dist(grid.weight(grid.winner(p)), p)
        })
        .sum::<f64>()
        / n as f64;
    assert!(err < 1.0, "mean quantization error {err}");
}

#[test]
fn reset_is_uniform_over_free_area() {
    let maze = Maze::empty_room();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut hist = [[0usize; 10]; 10];
    let n = 10_000;
    for _ in 0..n {
        let c = maze.cell_of(maze.reset(&mut rng).position);
        hist[c.y][c.x] += 1;
    }
    assert_eq!(hist[9][9], 0);
    let expected = n as f64 / 99.0;
    let chi2: f64 = maze
        .free_cells()
        .map(|c| (hist[c.y][c.x] as f64 - expected).powi(2) / expected)
        .sum();
    // chi-square critical value, 98 dof, p = 0.01
    assert!(chi2 < 133.48, "chi2 = {chi2}");
}

#[test]
fn fitness_and_actions_stay_bounded_over_long_run() {
    let maze = Maze::one_wall();
    let mut learner = Learner::new(LearnerParams::default(), 10, 10, 23).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut steps = 0u64;
    let mut violations = 0usize;
    let mut trial = 0;
    while steps < 100_000 {
        let mode = if trial % 2 == 0 {
            Mode::Explore
        } else {
            Mode::Exploit
        };
        harness::run_trial(&mut learner, &maze, mode, &mut rng, 500, |l| {
            steps += 1;
            if steps.is_multiple_of(50) {
                for (_, cell) in l.cells() {
                    violations += cell
                        .entries()
                        .filter(|e| !(-200.0..=10_000.0).contains(&e.fitness))
                        .count();
                }
                for &id in l.pool().live_ids() {
                    let a = l.pool().action(id).unwrap();
                    if !a.iter().all(|v| (-1.0..=1.0).contains(v)) {
                        violations += 1;
                    }
                }
            }
        })
        .unwrap();
        trial += 1;
    }
    assert_eq!(violations, 0);
    learner.audit().unwrap();
}

#[test]
fn evolved_cells_hold_full_subpopulations() {
    let params = LearnerParams {
        iota: 1,
        ..LearnerParams::default()
    };
    let mut learner = Learner::new(params, 10, 10, 25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut reward = None;
    for _ in 0..20_000 {
        let obs = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
        learner.step(obs, reward, false, Mode::Exploit).unwrap();
        reward = Some(-10.0);
        for (_, cell) in learner.cells() {
            if cell.initialized {
                assert_eq!((cell.best.len(), cell.novel.len()), (5, 10));
            } else {
                assert!(cell.is_empty() && cell.experience == 0);
            }
        }
    }
}

#[test]
fn single_cell_maps_are_constant_and_read_only() {
    let params = LearnerParams {
        beta: 1,
        ..LearnerParams::default()
    };
    let som = SomGrid::from_weights(1, 1, vec![[5.0, 5.0]]);
    let mut learner = Learner::with_som(params, som, ChaCha8Rng::seed_from_u64(27));
    learner.ensure_cell(CellCoord::new(0, 0)).unwrap();
    let cell = learner.cell(CellCoord::new(0, 0));
    let action = learner.pool().action(cell.best[0].macro_id).unwrap();
    let snapshot = learner.clone();
    let maze = Maze::empty_room();
    let mut rng = ChaCha8Rng::seed_from_u64(28);
    let map = behavior_map(&learner, &maze, &mut rng);
    // mean of 100 equal terms, up to summation rounding
    assert!(map
        .values
        .iter()
        .all(|v| (v[0] - action[0]).abs() < 1e-12 && (v[1] - action[1]).abs() < 1e-12));
    let fit = fitness_map(&learner, &maze, &mut rng);
    assert!(fit.values.iter().all(|&v| v == 0.0));
    assert_eq!(learner, snapshot);
}

#[test]
fn two_action_map_mean() {
    let params = LearnerParams {
        beta: 2,
        ..LearnerParams::default()
    };
    let som = SomGrid::from_weights(1, 1, vec![[5.0, 5.0]]);
    let mut learner = Learner::with_som(params, som, ChaCha8Rng::seed_from_u64(29));
    learner.ensure_cell(CellCoord::new(0, 0)).unwrap();
    let best = &learner.cell(CellCoord::new(0, 0)).best;
    let a = learner.pool().action(best[0].macro_id).unwrap();
    let b = learner.pool().action(best[1].macro_id).unwrap();
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let map = behavior_map(
        &learner,
        &Maze::empty_room(),
        &mut ChaCha8Rng::seed_from_u64(30),
    );
    // each coordinate mean of 100 two-point draws has sd |a - b| / 20 <= 0.1
    for v in &map.values {
        assert!((v[0] - mid[0]).abs() <= 0.3 && (v[1] - mid[1]).abs() <= 0.3);
    }
    let overall: f64 = map.values.iter().map(|v| v[0]).sum::<f64>() / map.values.len() as f64;
    assert!((overall - mid[0]).abs() < 0.03);
}

#[test]
fn trained_maps_leave_learner_untouched() {
    let maze = Maze::empty_room();
    let mut learner = Learner::new(LearnerParams::default(), 10, 10, 31).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for k in 0..300 {
        let mode = if k % 2 == 0 {
            Mode::Explore
        } else {
            Mode::Exploit
        };
        harness::run_trial(&mut learner, &maze, mode, &mut rng, 500, |_| {}).unwrap();
    }
    let snapshot = learner.clone();
    let f = fitness_map(&learner, &maze, &mut rng);
    let _ = behavior_map(&learner, &maze, &mut rng);
    assert_eq!(learner, snapshot);
    assert!(f.values.iter().all(|v| (-200.0..=10_000.0).contains(v)));
}

#[test]
fn distinct_seeds_give_distinct_traces() {
    let mut cfg = harness::ExperimentConfig::paper(Maze::empty_room());
    cfg.trials = 200;
    cfg.repetitions = 2;
    let agg = harness::run_batch(&cfg, 2).unwrap();
    assert_ne!(agg.runs[0].trials, agg.runs[1].trials);
    let again = harness::run_batch(&cfg, 1).unwrap();
    assert_eq!(agg, again);
}
