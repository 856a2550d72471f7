/// All simple directed cycles on `0..k` of length 2 through `k`, each listed
/// once, starting from its smallest index.
pub fn simple_cycles(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(k);
    let mut used = vec![false; k];
    for start in 0..k {
        path.push(start);
        used[start] = true;
        extend(k, start, &mut path, &mut used, &mut out);
        used[start] = false;
        path.pop();
    }
    out
}

fn extend(k: usize, start: usize, path: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
    for next in start + 1..k {
        if used[next] {
            continue;
        }
        path.push(next);
        used[next] = true;
        out.push(path.clone());
        extend(k, start, path, used, out);
        used[next] = false;
        path.pop();
    }
}

/// `Σ_{n=2}^{k} C(k, n)·(n − 1)!`.
pub fn simple_cycle_count(k: usize) -> u64 {
    let mut total = 0u64;
    for n in 2..=k as u64 {
        let mut choose = 1u64;
        for t in 0..n {
            choose = choose * (k as u64 - t) / (t + 1);
        }
        let fact: u64 = (1..n).product();
        total += choose * fact;
    }
    total
}
