//! Instance generation and the plain-text instance format.
//!
//! File layout: a header line `N k`, then the `N(N-1)/2` edge colors
//! (`1..=k`) in edge-index order, i.e. `for v in 1..N { for u in 0..v }`.
//! Lines starting with `#` are comments. The canonical writer separates
//! tokens by single spaces and breaks lines after every 20 colors.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{pair_count, ColoredCompleteGraph, MAX_EDGES};
use crate::rng::{derive_seed, derived_rng, rng_from_seed};
use crate::rounding::{certify_origin, ConvexCombination};
use crate::rpm::rpm_sample;

const TOKENS_PER_LINE: usize = 20;

/// Attempts made by [`unbalanced_hull_instance`] before giving up.
pub const HULL_ATTEMPT_CAP: usize = 100;

const HULL_SAMPLES: usize = 200;

fn checked_order(k: usize, n: usize) -> Result<usize> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!("k={k} and n={n} must be positive")));
    }
    let order = k
        .checked_mul(n)
        .and_then(|x| x.checked_mul(2))
        .ok_or(Error::TooLarge { k, n })?;
    match pair_count(order) {
        Some(e) if e <= MAX_EDGES => Ok(order),
        _ => Err(Error::TooLarge { k, n }),
    }
}

/// Uniformly random coloring of `K_{2kn}` with `n(2kn-1)` edges of each color.
pub fn random_balanced(k: usize, n: usize, seed: u64) -> Result<ColoredCompleteGraph> {
    let order = checked_order(k, n)?;
    let per_color = n * (order - 1);
    let mut colors: Vec<usize> = (0..k).flat_map(|c| std::iter::repeat_n(c, per_color)).collect();
    colors.shuffle(&mut rng_from_seed(seed));
    ColoredCompleteGraph::from_edge_colors(order, k, colors)
}

/// The 3-colored `K_6` without a perfect matching that uses every color once.
///
/// Vertex `u_i` is `i - 1`. Color 0 is the bold class, color 1 the dashed
/// class, color 2 everything else.
pub fn figure1_instance() -> ColoredCompleteGraph {
    const BOLD: [(usize, usize); 5] = [(5, 6), (1, 5), (1, 2), (2, 4), (4, 5)];
    const DASHED: [(usize, usize); 5] = [(2, 3), (1, 4), (4, 6), (3, 5), (1, 6)];
    let has = |set: &[(usize, usize)], u: usize, v: usize| {
        set.iter()
            .any(|&(a, b)| (a - 1, b - 1) == (u, v) || (a - 1, b - 1) == (v, u))
    };
    ColoredCompleteGraph::from_fn(6, 3, |u, v| {
        if has(&BOLD, u, v) {
            0
        } else if has(&DASHED, u, v) {
            1
        } else {
            2
        }
    })
    .expect("fixed instance is well formed")
}

/// An unbalanced coloring together with a convex combination of matching
/// vectors that hits the origin.
#[derive(Clone, Debug)]
pub struct HullInstance {
    pub graph: ColoredCompleteGraph,
    pub certificate: ConvexCombination,
    pub attempts: usize,
}

/// Perturbs balanced colorings until one is unbalanced yet still has the
/// origin certified inside the hull of sampled matching vectors.
pub fn unbalanced_hull_instance(k: usize, n: usize, seed: u64) -> Result<HullInstance> {
    if k < 4 {
        return Err(Error::InvalidParameter(format!(
            "unbalanced hull instances need k >= 4, got {k}"
        )));
    }
    checked_order(k, n)?;
    for attempt in 0..HULL_ATTEMPT_CAP {
        let mut rng = derived_rng(seed, attempt as u64);
        let mut g = random_balanced(k, n, derive_seed(seed, attempt as u64 ^ (1 << 63)))?;
        let recolors = rng.random_range(1..=k);
        for _ in 0..recolors {
            let e = rng.random_range(0..g.edge_count());
            let old = g.color_at_index(e);
            let new = (old + rng.random_range(1..k)) % k;
            g.set_color_at_index(e, new);
        }
        if g.is_balanced() {
            continue;
        }
        let samples = (0..HULL_SAMPLES)
            .map(|_| rpm_sample(g.order(), &mut rng))
            .collect::<Result<Vec<_>>>()?;
        match certify_origin(&g, n, &samples, HULL_SAMPLES, &mut rng) {
            Ok(certificate) => {
                return Ok(HullInstance {
                    graph: g,
                    certificate,
                    attempts: attempt + 1,
                })
            }
            Err(Error::HullNotCertified { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::HullSearchExhausted {
        attempts: HULL_ATTEMPT_CAP,
    })
}

pub fn write_instance<W: Write>(g: &ColoredCompleteGraph, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", g.order(), g.num_colors())?;
    let mut line = String::new();
    for (i, c) in g.edge_colors().enumerate() {
        if i % TOKENS_PER_LINE != 0 {
            line.push(' ');
        }
        line.push_str(&(c + 1).to_string());
        if i % TOKENS_PER_LINE == TOKENS_PER_LINE - 1 {
            writeln!(out, "{line}")?;
            line.clear();
        }
    }
    if !line.is_empty() {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn instance_to_string(g: &ColoredCompleteGraph) -> String {
    let mut buf = Vec::new();
    write_instance(g, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

pub fn read_instance<R: Read>(input: R) -> Result<ColoredCompleteGraph> {
    let reader = BufReader::new(input);
    let mut header: Option<(usize, usize, usize)> = None;
    let mut colors = Vec::new();
    let mut expected = 0;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let Some((_, k, _)) = header else {
            let parse = |t: &str| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("malformed header: `{t}` is not a non-negative integer"),
                })
            };
            if tokens.len() != 2 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("malformed header: expected `N k`, found {} tokens", tokens.len()),
                });
            }
            let (order, k) = (parse(tokens[0])?, parse(tokens[1])?);
            if order < 2 || order % 2 != 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("order {order} is not a positive even integer"),
                });
            }
            if k == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "number of colors must be positive".into(),
                });
            }
            expected = match pair_count(order) {
                Some(e) if e <= MAX_EDGES => e,
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("order {order} exceeds the supported edge count"),
                    })
                }
            };
            colors.reserve(expected);
            header = Some((order, k, line_no));
            continue;
        };
        for t in tokens {
            let c: usize = t.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("`{t}` is not a color"),
            })?;
            if c == 0 || c > k {
                return Err(Error::FileColorOutOfRange {
                    line: line_no,
                    color: c,
                    num_colors: k,
                });
            }
            if colors.len() == expected {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("more than the expected {expected} edge colors"),
                });
            }
            colors.push(c - 1);
        }
    }

    let Some((order, k, _)) = header else {
        return Err(Error::Parse {
            line: 0,
            message: "malformed header: file is empty".into(),
        });
    };
    if colors.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: colors.len(),
            missing: expected - colors.len(),
        });
    }
    ColoredCompleteGraph::from_edge_colors(order, k, colors)
}

pub fn read_instance_file<P: AsRef<Path>>(path: P) -> Result<ColoredCompleteGraph> {
    read_instance(fs::File::open(path)?)
}

pub fn write_instance_file<P: AsRef<Path>>(g: &ColoredCompleteGraph, path: P) -> Result<()> {
    fs::write(path, instance_to_string(g))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_n1_is_a_single_edge() {
        let g = random_balanced(1, 1, 99).unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(g.color_counts(), &[1]);
    }

    #[test]
    fn balanced_counts() {
        for seed in 0..5 {
            assert_eq!(random_balanced(3, 1, seed).unwrap().color_counts(), &[5, 5, 5]);
        }
        let g = random_balanced(4, 3, 7).unwrap();
        assert!(g.is_balanced());
        assert!(g.color_counts().iter().all(|&c| c == 3 * (24 - 1)));
        assert_eq!(g, random_balanced(4, 3, 7).unwrap());
    }

    #[test]
    fn oversized_request_rejected() {
        assert!(matches!(
            random_balanced(1 << 20, 1 << 20, 0),
            Err(Error::TooLarge { .. })
        ));
        assert!(matches!(random_balanced(usize::MAX, 3, 0), Err(Error::TooLarge { .. })));
        assert!(random_balanced(0, 3, 0).is_err());
    }

    #[test]
    fn figure1_classes() {
        let g = figure1_instance();
        assert!(g.is_balanced());
        assert_eq!(g.color_counts(), &[5, 5, 5]);
        let third = [(1, 3), (2, 5), (2, 6), (3, 4), (3, 6)];
        for (a, b) in third {
            assert_eq!(g.edge_color(a - 1, b - 1).unwrap(), 2);
        }
    }

    #[test]
    fn figure1_roundtrip_is_canonical() {
        let g = figure1_instance();
        let text = instance_to_string(&g);
        assert_eq!(text, "6 3\n1 3 2 2 1 3 1 3 2 1 2 3 3 2 1\n");
        let back = read_instance(text.as_bytes()).unwrap();
        assert_eq!(back, g);
        assert_eq!(instance_to_string(&back), text);
    }

    #[test]
    fn long_files_wrap_every_20_tokens() {
        let g = random_balanced(2, 2, 5).unwrap();
        let text = instance_to_string(&g);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2);
        assert_eq!(lines[1].split(' ').count(), 20);
        assert_eq!(lines[2].split(' ').count(), 8);
    }

    #[test]
    fn comments_are_ignored() {
        let text = "# figure one\n6 3 # header\n1 3 2 2 1\n# middle\n3 1 3 2 1 2 3 3 2 1\n";
        assert_eq!(read_instance(text.as_bytes()).unwrap(), figure1_instance());
    }

    #[test]
    fn truncated_file_names_missing_count() {
        let err = read_instance("6 3\n1 1 3 3 1 2 2 3 1 1 2 3\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::Truncated {
                expected: 15,
                found: 12,
                missing: 3
            }
        ));
        assert!(err.to_string().contains("3 missing"));
    }

    #[test]
    fn color_out_of_range_names_line() {
        let err = read_instance("6 3\n1 1 3 3 1\n2 2 4 1 1 2 3 3 2 1\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::FileColorOutOfRange {
                line: 3,
                color: 4,
                num_colors: 3
            }
        ));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_instance("".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(
            read_instance("6\n1".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_instance("5 3\n1".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_instance("x 3\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_instance("2 1\n1 1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_instance("2 1\nred\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn per_edge_color_frequencies_are_uniform() {
        let trials = 10_000;
        let mut hits = vec![[0usize; 3]; 15];
        for seed in 0..trials {
            let g = random_balanced(3, 1, seed).unwrap();
            for (i, c) in g.edge_colors().enumerate() {
                hits[i][c] += 1;
            }
        }
        for row in &hits {
            for &h in row {
                let freq = h as f64 / trials as f64;
                assert!((freq - 1.0 / 3.0).abs() <= 0.02, "frequency {freq}");
            }
        }
    }

    #[test]
    fn hull_instance_is_unbalanced_and_certified() {
        let inst = unbalanced_hull_instance(4, 2, 1).unwrap();
        assert!(!inst.graph.is_balanced());
        inst.certificate.verify(&inst.graph, 2).unwrap();
        let again = unbalanced_hull_instance(4, 2, 1).unwrap();
        assert_eq!(instance_to_string(&inst.graph), instance_to_string(&again.graph));
        assert!(unbalanced_hull_instance(3, 2, 1).is_err());
    }
}
