//! Brute-force metric oracles. They share nothing with the production
//! kernels: n-grams are plain string vectors, counters are ordered maps and
//! every multiset operation is spelled out literally.

use std::collections::{BTreeMap, BTreeSet};

type Gram = Vec<String>;
type Counter = BTreeMap<Gram, i64>;

fn grams(tokens: &[String], n: usize) -> Counter {
    let mut out = Counter::new();
    if tokens.len() < n {
        return out;
    }
    for start in 0..=tokens.len() - n {
        let g: Gram = tokens[start..start + n].to_vec();
        *out.entry(g).or_insert(0) += 1;
    }
    out
}

fn scale(c: &Counter, k: i64) -> Counter {
    c.iter().map(|(g, v)| (g.clone(), v * k)).collect()
}

fn get(c: &Counter, g: &Gram) -> i64 {
    *c.get(g).unwrap_or(&0)
}

/// Multiset intersection, dropping non-positive entries.
fn and(a: &Counter, b: &Counter) -> Counter {
    let mut out = Counter::new();
    for (g, &v) in a {
        let m = v.min(get(b, g));
        if m > 0 {
            out.insert(g.clone(), m);
        }
    }
    out
}

/// Multiset difference, dropping non-positive entries.
fn sub(a: &Counter, b: &Counter) -> Counter {
    let mut out = Counter::new();
    for (g, &v) in a {
        let m = v - get(b, g);
        if m > 0 {
            out.insert(g.clone(), m);
        }
    }
    out
}

fn keys(c: &Counter) -> BTreeSet<Gram> {
    c.keys().cloned().collect()
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Returns (add, keep, delete) for one order.
fn sari_order(src: &[String], hyp: &[String], refs: &[Vec<String>], n: usize) -> (f64, f64, f64) {
    let num_refs = refs.len() as i64;
    let s = grams(src, n);
    let c = grams(hyp, n);
    let mut r = Counter::new();
    for reference in refs {
        for (g, v) in grams(reference, n) {
            *r.entry(g).or_insert(0) += v;
        }
    }
    let s_rep = scale(&s, num_refs);
    let c_rep = scale(&c, num_refs);

    let keep = and(&s_rep, &c_rep);
    let keep_good = and(&keep, &r);
    let keep_all = and(&s_rep, &r);
    let keep_score = if keep.is_empty() && keep_all.is_empty() {
        1.0
    } else {
        let mut p = 0.0;
        for (g, &v) in &keep {
            p += get(&keep_good, g) as f64 / v as f64;
        }
        let p = if keep.is_empty() { 0.0 } else { p / keep.len() as f64 };
        let mut rc = 0.0;
        for (g, &v) in &keep_all {
            rc += get(&keep_good, g) as f64 / v as f64;
        }
        let rc = if keep_all.is_empty() { 0.0 } else { rc / keep_all.len() as f64 };
        f1(p, rc)
    };

    let del = sub(&s_rep, &c_rep);
    let del_good = sub(&del, &r);
    let del_all = sub(&s_rep, &r);
    let del_score = if del.is_empty() && del_all.is_empty() {
        1.0
    } else if del.is_empty() {
        0.0
    } else {
        let mut p = 0.0;
        for (g, &v) in &del {
            p += get(&del_good, g) as f64 / v as f64;
        }
        p / del.len() as f64
    };

    let sk = keys(&s);
    let add: BTreeSet<Gram> = keys(&c).difference(&sk).cloned().collect();
    let add_all: BTreeSet<Gram> = keys(&r).difference(&sk).cloned().collect();
    let add_good = add.intersection(&add_all).count() as f64;
    let add_score = if add.is_empty() && add_all.is_empty() {
        1.0
    } else {
        let p = if add.is_empty() { 0.0 } else { add_good / add.len() as f64 };
        let rc = if add_all.is_empty() { 0.0 } else { add_good / add_all.len() as f64 };
        f1(p, rc)
    };
    (add_score, keep_score, del_score)
}

pub fn sari(src: &[String], hyp: &[String], refs: &[Vec<String>]) -> f64 {
    let mut total = 0.0;
    for n in 1..=4 {
        let (a, k, d) = sari_order(src, hyp, refs, n);
        total += (a + k + d) / 3.0;
    }
    100.0 * total / 4.0
}

/// One sentence: (src, hyp, refs).
pub type Item = (Vec<String>, Vec<String>, Vec<Vec<String>>);

fn geometric(c: i64, r: i64, nums: &[i64; 4], dens: &[i64; 4], brevity_strict: bool) -> f64 {
    if c == 0 {
        return 0.0;
    }
    let mut logs = Vec::new();
    for k in 0..4 {
        if dens[k] == 0 {
            continue;
        }
        if nums[k] == 0 {
            return 0.0;
        }
        logs.push((nums[k] as f64 / dens[k] as f64).ln());
    }
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let bp = if brevity_strict {
        if c >= r {
            0.0
        } else {
            1.0 - r as f64 / c as f64
        }
    } else {
        (1.0 - r as f64 / c as f64).min(0.0)
    };
    100.0 * (bp + mean).exp()
}

pub fn gleu(corpus: &[Item]) -> f64 {
    let max_refs = corpus.iter().map(|i| i.2.len()).max().unwrap();
    let mut sum = 0.0;
    for j in 0..max_refs {
        let (mut c, mut r) = (0i64, 0i64);
        let mut nums = [0i64; 4];
        let mut dens = [0i64; 4];
        for (src, hyp, refs) in corpus {
            let reference = &refs[j % refs.len()];
            c += hyp.len() as i64;
            r += reference.len() as i64;
            for n in 1..=4 {
                let h = grams(hyp, n);
                let rg = grams(reference, n);
                let s = grams(src, n);
                let mut s_diff = s.clone();
                for g in keys(&s).intersection(&keys(&rg)) {
                    s_diff.remove(g);
                }
                let matched: i64 = and(&h, &rg).values().sum();
                let penalty: i64 = and(&h, &s_diff).values().sum();
                nums[n - 1] += (matched - penalty).max(0);
                dens[n - 1] += (hyp.len() as i64 + 1 - n as i64).max(0);
            }
        }
        sum += geometric(c, r, &nums, &dens, false);
    }
    sum / max_refs as f64
}

/// Corpus BLEU; `refs` per item are the comparison set.
pub fn bleu(corpus: &[(Vec<String>, Vec<Vec<String>>)]) -> f64 {
    let (mut c, mut r) = (0i64, 0i64);
    let mut nums = [0i64; 4];
    let mut dens = [0i64; 4];
    for (hyp, refs) in corpus {
        let hl = hyp.len() as i64;
        c += hl;
        let mut best = refs[0].len() as i64;
        for reference in refs {
            let l = reference.len() as i64;
            let (d, bd) = ((l - hl).abs(), (best - hl).abs());
            if d < bd || (d == bd && l < best) {
                best = l;
            }
        }
        r += best;
        for n in 1..=4 {
            let h = grams(hyp, n);
            let mut max_ref = Counter::new();
            for reference in refs {
                for (g, v) in grams(reference, n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(v);
                }
            }
            nums[n - 1] += and(&h, &max_ref).values().sum::<i64>();
            dens[n - 1] += (hl + 1 - n as i64).max(0);
        }
    }
    geometric(c, r, &nums, &dens, true)
}
