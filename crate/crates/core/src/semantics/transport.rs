//! Exact optimal transport on small finite supports.
//!
//! Successive shortest paths with Dijkstra on reduced costs over the dense
//! bipartite residual graph. Masses are real-valued, so exhausted supplies,
//! demands and arc flows are compared against a small tolerance.

const TOL: f64 = 1e-14;

/// Minimum cost of moving `supply` onto `demand` where moving one unit from
/// source `i` to sink `j` costs `cost[i][j]` (non-negative). Transports
/// `min(sum(supply), sum(demand))` units.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (ns, nt) = (supply.len(), demand.len());
    if ns == 0 || nt == 0 {
        return 0.0;
    }
    let mut supply = supply.to_vec();
    let mut demand = demand.to_vec();
    let mut flow = vec![vec![0.0f64; nt]; ns];
    // node ids: sources 0..ns, sinks ns..ns+nt
    let n = ns + nt;
    let mut pot = vec![0.0f64; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut done = vec![false; n];

    loop {
        let has_supply = supply.iter().any(|&s| s > TOL);
        let has_demand = demand.iter().any(|&d| d > TOL);
        if !has_supply || !has_demand {
            break;
        }
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        for (i, &s) in supply.iter().enumerate() {
            if s > TOL {
                dist[i] = 0.0;
            }
        }
        for _ in 0..n {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < ns {
                for j in 0..nt {
                    let v = ns + j;
                    if done[v] {
                        continue;
                    }
                    let nd = best + cost[u][j] + pot[u] - pot[v];
                    if nd < dist[v] {
                        dist[v] = nd;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - ns;
                for i in 0..ns {
                    if done[i] || flow[i][j] <= TOL {
                        continue;
                    }
                    let nd = best - cost[i][j] + pot[u] - pot[i];
                    if nd < dist[i] {
                        dist[i] = nd;
                        prev[i] = u;
                    }
                }
            }
        }
        let Some(sink) = (0..nt)
            .filter(|&j| demand[j] > TOL && dist[ns + j].is_finite())
            .min_by(|&a, &b| dist[ns + a].total_cmp(&dist[ns + b]))
        else {
            break;
        };
        let reach = dist[ns + sink];
        for v in 0..n {
            pot[v] += dist[v].min(reach);
        }

        // walk back to the root source, collecting the bottleneck
        let mut delta = demand[sink];
        let mut v = ns + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= ns {
                // backward arc sink u -> source v cancels flow[v][u - ns]
                delta = delta.min(flow[v][u - ns]);
            }
            v = u;
        }
        let root = v;
        delta = delta.min(supply[root]);

        let mut v = ns + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < ns {
                flow[u][v - ns] += delta;
            } else {
                flow[v][u - ns] -= delta;
            }
            v = u;
        }
        supply[root] -= delta;
        demand[sink] -= delta;
    }

    flow.iter()
        .zip(cost)
        .map(|(row, c)| row.iter().zip(c).map(|(f, c)| f * c).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// W1 on the real line: integral of |F - G|.
    fn line_w1(xs: &[f64], p: &[f64], ys: &[f64], q: &[f64]) -> f64 {
        let mut events: Vec<(f64, f64)> = xs
            .iter()
            .zip(p)
            .map(|(&x, &m)| (x, m))
            .chain(ys.iter().zip(q).map(|(&y, &m)| (y, -m)))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cdf_gap = 0.0;
        let mut total = 0.0;
        for w in events.windows(2) {
            cdf_gap += w[0].1;
            total += cdf_gap.abs() * (w[1].0 - w[0].0);
        }
        total
    }

    fn normalize(v: &mut [f64]) {
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
    }

    #[test]
    fn moves_half_the_mass() {
        let c = vec![vec![0.0], vec![1.0]];
        assert_eq!(transport_cost(&[0.5, 0.5], &[1.0], &c), 0.5);
    }

    #[test]
    fn needs_rerouting() {
        // greedy would send source 0 to sink 0 and pay 10 for the rest
        let c = vec![vec![1.0, 2.0], vec![1.0, 10.0]];
        assert_eq!(transport_cost(&[1.0, 1.0], &[1.0, 1.0], &c), 3.0);
    }

    proptest! {
        #[test]
        fn matches_the_line_closed_form(
            xs in prop::collection::vec(0.0f64..1.0, 1..7),
            ys in prop::collection::vec(0.0f64..1.0, 1..7),
            pw in prop::collection::vec(0.01f64..1.0, 7),
            qw in prop::collection::vec(0.01f64..1.0, 7),
        ) {
            let mut p = pw[..xs.len()].to_vec();
            let mut q = qw[..ys.len()].to_vec();
            normalize(&mut p);
            normalize(&mut q);
            let cost: Vec<Vec<f64>> = xs
                .iter()
                .map(|x| ys.iter().map(|y| (x - y).abs()).collect())
                .collect();
            let got = transport_cost(&p, &q, &cost);
            let want = line_w1(&xs, &p, &ys, &q);
            prop_assert!((got - want).abs() < 1e-9, "got {got}, want {want}");
        }

        #[test]
        fn discrete_metric_gives_total_variation(
            pw in prop::collection::vec(0.0f64..1.0, 2..9),
            qw in prop::collection::vec(0.0f64..1.0, 2..9),
        ) {
            let n = pw.len().min(qw.len());
            let mut p = pw[..n].to_vec();
            let mut q = qw[..n].to_vec();
            prop_assume!(p.iter().sum::<f64>() > 0.1 && q.iter().sum::<f64>() > 0.1);
            normalize(&mut p);
            normalize(&mut q);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
                .collect();
            let tv = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
            prop_assert!((transport_cost(&p, &q, &cost) - tv).abs() < 1e-9);
        }
    }
}
