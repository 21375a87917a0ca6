//! Parity games and a recursive attractor-decomposition solver.

/// The two players: the verifier wins even cycles and owns disjunctive
/// choices, the refuter wins odd cycles and owns conjunctive choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Verifier,
    Refuter,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Verifier => Player::Refuter,
            Player::Refuter => Player::Verifier,
        }
    }

    /// The player winning infinite plays whose dominant priority is `p`.
    pub fn of_priority(p: u32) -> Player {
        if p % 2 == 0 {
            Player::Verifier
        } else {
            Player::Refuter
        }
    }
}

#[derive(Debug, Clone)]
pub struct GameNode {
    pub owner: Player,
    pub priority: u32,
    pub succs: Vec<usize>,
}

/// A finite parity game. Dead ends lose for their owner.
#[derive(Debug, Clone, Default)]
pub struct ParityGame {
    pub nodes: Vec<GameNode>,
    pub initial: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub winner: Vec<Player>,
}

impl Solution {
    pub fn winner_at(&self, node: usize) -> Player {
        self.winner[node]
    }

    pub fn region(&self, player: Player) -> Vec<usize> {
        self.winner
            .iter()
            .enumerate()
            .filter(|(_, w)| **w == player)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Solves the game positionally. Dead-end nodes are turned into self-loops
/// with a priority losing for their owner, then a standard recursive
/// attractor decomposition runs on the total game.
pub fn solve_parity_game(game: &ParityGame) -> Solution {
    let mut nodes = game.nodes.clone();
    for (i, node) in nodes.iter_mut().enumerate() {
        if node.succs.is_empty() {
            node.priority = match node.owner {
                Player::Verifier => 1,
                Player::Refuter => 0,
            };
            node.succs.push(i);
        }
    }
    let n = nodes.len();
    let preds: Vec<Vec<usize>> = {
        let mut p = vec![Vec::new(); n];
        for (i, node) in nodes.iter().enumerate() {
            for &s in &node.succs {
                p[s].push(i);
            }
        }
        p
    };
    let mut alive = vec![true; n];
    let winner = zielonka(&nodes, &preds, &mut alive);
    Solution { winner }
}

/// `alive` marks the current subgame; returns the winner of every node
/// (values for dead nodes are meaningless to the caller that removed them).
fn zielonka(nodes: &[GameNode], preds: &[Vec<usize>], alive: &mut Vec<bool>) -> Vec<Player> {
    let n = nodes.len();
    let mut winner = vec![Player::Verifier; n];
    let Some(max_p) = (0..n)
        .filter(|&i| alive[i])
        .map(|i| nodes[i].priority)
        .max()
    else {
        return winner;
    };
    let player = Player::of_priority(max_p);
    let targets: Vec<usize> = (0..n)
        .filter(|&i| alive[i] && nodes[i].priority == max_p)
        .collect();
    let region_a = attractor(nodes, preds, alive, player, &targets);

    // Solve the subgame without the attractor.
    let mut sub_alive = alive.clone();
    for &i in &region_a {
        sub_alive[i] = false;
    }
    let sub = zielonka(nodes, preds, &mut sub_alive);
    let opponent = player.opponent();
    let opp_region: Vec<usize> = (0..n)
        .filter(|&i| sub_alive[i] && sub[i] == opponent)
        .collect();
    if opp_region.is_empty() {
        for i in 0..n {
            if alive[i] {
                winner[i] = if sub_alive[i] { sub[i] } else { player };
            }
        }
        return winner;
    }
    // The opponent also attracts within the full subgame; remove and recurse.
    let opp_attr = attractor(nodes, preds, alive, opponent, &opp_region);
    let mut rest_alive = alive.clone();
    for &i in &opp_attr {
        rest_alive[i] = false;
    }
    let rest = zielonka(nodes, preds, &mut rest_alive);
    for i in 0..n {
        if alive[i] {
            winner[i] = if rest_alive[i] {
                rest[i]
            } else if opp_attr.contains(&i) {
                opponent
            } else {
                unreachable!("node neither removed nor alive")
            };
        }
    }
    // opp_attr covers exactly the removed nodes
    winner
}

/// Nodes from which `player` can force reaching `targets` inside the alive
/// subgame.
fn attractor(
    nodes: &[GameNode],
    preds: &[Vec<usize>],
    alive: &[bool],
    player: Player,
    targets: &[usize],
) -> Vec<usize> {
    let n = nodes.len();
    let mut in_attr = vec![false; n];
    let mut out_degree: Vec<usize> = (0..n)
        .map(|i| nodes[i].succs.iter().filter(|&&s| alive[s]).count())
        .collect();
    let mut queue: Vec<usize> = Vec::new();
    for &t in targets {
        if alive[t] && !in_attr[t] {
            in_attr[t] = true;
            queue.push(t);
        }
    }
    while let Some(v) = queue.pop() {
        for &u in &preds[v] {
            if !alive[u] || in_attr[u] {
                continue;
            }
            let join = if nodes[u].owner == player {
                true
            } else {
                out_degree[u] -= 1;
                out_degree[u] == 0
            };
            if join {
                in_attr[u] = true;
                queue.push(u);
            }
        }
    }
    (0..n).filter(|&i| in_attr[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn node(owner: Player, priority: u32, succs: &[usize]) -> GameNode {
        GameNode { owner, priority, succs: succs.to_vec() }
    }

    #[test]
    fn self_loops() {
        let even = ParityGame {
            nodes: vec![node(Player::Verifier, 0, &[0])],
            initial: 0,
        };
        assert_eq!(solve_parity_game(&even).winner_at(0), Player::Verifier);

        let odd = ParityGame {
            nodes: vec![node(Player::Verifier, 1, &[0])],
            initial: 0,
        };
        assert_eq!(solve_parity_game(&odd).winner_at(0), Player::Refuter);
    }

    #[test]
    fn dead_ends_lose_for_their_owner() {
        let game = ParityGame {
            nodes: vec![
                node(Player::Verifier, 0, &[]),
                node(Player::Refuter, 0, &[]),
            ],
            initial: 0,
        };
        let sol = solve_parity_game(&game);
        assert_eq!(sol.winner_at(0), Player::Refuter);
        assert_eq!(sol.winner_at(1), Player::Verifier);
    }

    #[test]
    fn alternation_respects_dominance() {
        // verifier can choose between an odd 1-loop and an even 2-loop
        let game = ParityGame {
            nodes: vec![
                node(Player::Verifier, 0, &[1, 2]),
                node(Player::Refuter, 1, &[1]),
                node(Player::Refuter, 2, &[2]),
            ],
            initial: 0,
        };
        let sol = solve_parity_game(&game);
        assert_eq!(sol.winner_at(0), Player::Verifier);
        assert_eq!(sol.winner_at(1), Player::Refuter);
        assert_eq!(sol.winner_at(2), Player::Verifier);
    }

    /// Exhaustive positional-strategy oracle for small games.
    fn brute_force(game: &ParityGame, from: usize) -> Player {
        // normalize dead ends the same way the solver does
        let mut nodes = game.nodes.clone();
        for (i, n) in nodes.iter_mut().enumerate() {
            if n.succs.is_empty() {
                n.priority = match n.owner {
                    Player::Verifier => 1,
                    Player::Refuter => 0,
                };
                n.succs.push(i);
            }
        }
        let v_nodes: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].owner == Player::Verifier)
            .collect();
        let mut choice_sets: Vec<Vec<usize>> = Vec::new();
        for &v in &v_nodes {
            choice_sets.push(nodes[v].succs.clone());
        }
        let mut counters = vec![0usize; v_nodes.len()];
        loop {
            // fixed verifier strategy: check all refuter plays from `from`
            let strategy: std::collections::HashMap<usize, usize> = v_nodes
                .iter()
                .zip(&counters)
                .map(|(&v, &c)| (v, choice_sets[v_nodes.iter().position(|&x| x == v).unwrap()][c]))
                .collect();
            if verifier_wins_under(&nodes, &strategy, from) {
                return Player::Verifier;
            }
            // next strategy
            let mut i = 0;
            loop {
                if i == counters.len() {
                    return Player::Refuter;
                }
                counters[i] += 1;
                if counters[i] < choice_sets[i].len() {
                    break;
                }
                counters[i] = 0;
                i += 1;
            }
        }
    }

    /// With the verifier's moves fixed, every choice left belongs to the
    /// refuter, so the verifier wins from `from` iff no reachable simple
    /// cycle of the restricted graph has an odd maximum priority.
    fn verifier_wins_under(
        nodes: &[GameNode],
        strategy: &std::collections::HashMap<usize, usize>,
        from: usize,
    ) -> bool {
        let succs = |v: usize| -> Vec<usize> {
            match nodes[v].owner {
                Player::Verifier => vec![strategy[&v]],
                Player::Refuter => nodes[v].succs.clone(),
            }
        };
        fn has_odd_cycle(
            nodes: &[GameNode],
            succs: &dyn Fn(usize) -> Vec<usize>,
            path: &mut Vec<usize>,
            v: usize,
        ) -> bool {
            for s in succs(v) {
                if let Some(pos) = path.iter().position(|&x| x == s) {
                    let max = path[pos..].iter().map(|&x| nodes[x].priority).max().unwrap();
                    if max % 2 == 1 {
                        return true;
                    }
                } else {
                    path.push(s);
                    if has_odd_cycle(nodes, succs, path, s) {
                        return true;
                    }
                    path.pop();
                }
            }
            false
        }
        !has_odd_cycle(nodes, &succs, &mut vec![from], from)
    }

    #[test]
    fn matches_brute_force_on_random_games() {
        let mut rng = StdRng::seed_from_u64(0xA11CE);
        for case in 0..300 {
            let n = rng.gen_range(1..=8usize);
            let nodes: Vec<GameNode> = (0..n)
                .map(|_| {
                    let owner = if rng.gen_bool(0.5) {
                        Player::Verifier
                    } else {
                        Player::Refuter
                    };
                    let priority = rng.gen_range(0..=4u32);
                    let degree = rng.gen_range(0..=3usize);
                    let succs: Vec<usize> =
                        (0..degree).map(|_| rng.gen_range(0..n)).collect();
                    GameNode { owner, priority, succs }
                })
                .collect();
            let game = ParityGame { nodes, initial: 0 };
            let sol = solve_parity_game(&game);
            for from in 0..n {
                assert_eq!(
                    sol.winner_at(from),
                    brute_force(&game, from),
                    "case {case}, node {from}, game {game:?}"
                );
            }
        }
    }
}
