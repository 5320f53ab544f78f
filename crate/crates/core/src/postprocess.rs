//! From measure maps to thin binary curves.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::image::{BinaryMap, NEIGHBORS_8};
use crate::measures::MeasureMap;

/// An ordered run of 8-connected skeleton pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveChain {
    pub pixels: Vec<(usize, usize)>,
    /// The last pixel is adjacent to the first; the first is not repeated.
    pub closed: bool,
}

impl CurveChain {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

/// Two-threshold binarization with 8-connected growth from the seeds.
pub fn hysteresis_threshold(measure: &MeasureMap, low: f64, high: f64) -> Result<BinaryMap> {
    if !(0.0..=1.0).contains(&low) || low.is_nan() {
        return Err(Error::param("low", "must lie in [0, 1]"));
    }
    if high.is_nan() || high < low {
        return Err(Error::param("high", "must not be below `low`"));
    }
    Ok(hysteresis_values(measure.values(), measure.width(), measure.height(), low, high))
}

/// Hysteresis on raw values; shared with the Canny baseline.
pub(crate) fn hysteresis_values(
    values: &[f64],
    width: usize,
    height: usize,
    low: f64,
    high: f64,
) -> BinaryMap {
    let mut out = BinaryMap::new(width, height);
    let mut queue = VecDeque::new();
    for (i, &v) in values.iter().enumerate() {
        if v >= high {
            out.set(i % width, i / width, true);
            queue.push_back((i % width, i / width));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in NEIGHBORS_8 {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                continue;
            }
            let (nx, ny) = (nx as usize, ny as usize);
            if !out.get(nx, ny) && values[ny * width + nx] >= low {
                out.set(nx, ny, true);
                queue.push_back((nx, ny));
            }
        }
    }
    out
}

/// Ring of the eight neighbors in `NEIGHBORS_8` order (E, NE, N, NW, W, SW, S, SE).
fn ring(map: &BinaryMap, x: usize, y: usize) -> [bool; 8] {
    let mut r = [false; 8];
    for (k, (dx, dy)) in NEIGHBORS_8.iter().enumerate() {
        r[k] = map.get_signed(x as isize + dx, y as isize + dy);
    }
    r
}

/// 8-connectivity number; a foreground pixel is simple exactly when it is 1.
fn connectivity_number(r: &[bool; 8]) -> usize {
    [0, 2, 4, 6]
        .iter()
        .filter(|&&k| !r[k] && !(!r[(k + 1) % 8] && !r[(k + 2) % 8]))
        .count()
}

/// Whether removing the on-pixel `(x, y)` keeps the topology of the map.
pub fn is_simple(map: &BinaryMap, x: usize, y: usize) -> bool {
    connectivity_number(&ring(map, x, y)) == 1
}

/// One directional sub-iteration: border pixels whose neighbor in direction
/// `dir` is background are candidates, and candidates that are still simple
/// and not curve ends are removed.
fn directional_pass(map: &mut BinaryMap, dir: (isize, isize)) -> bool {
    let candidates: Vec<(usize, usize)> = map
        .on_pixels()
        .filter(|&(x, y)| !map.get_signed(x as isize + dir.0, y as isize + dir.1))
        .filter(|&(x, y)| map.neighbor_count(x, y) > 1 && is_simple(map, x, y))
        .collect();
    let mut changed = false;
    for (x, y) in candidates {
        if map.neighbor_count(x, y) > 1 && is_simple(map, x, y) {
            map.set(x, y, false);
            changed = true;
        }
    }
    changed
}

/// Removes simple pixels that still have three or more neighbors
/// (staircase corners left by the directional passes).
fn staircase_pass(map: &mut BinaryMap) -> bool {
    let (w, h) = map.dims();
    let mut changed = false;
    for y in 0..h {
        for x in 0..w {
            if map.get(x, y) && map.neighbor_count(x, y) >= 3 && is_simple(map, x, y) {
                map.set(x, y, false);
                changed = true;
            }
        }
    }
    changed
}

/// Thins a binary map to a unit-width, 8-connected skeleton.
///
/// Border pixels are peeled from the north, south, east and west in turn;
/// a pixel goes only while it is simple and has at least two neighbors, so
/// curve ends stay in place.
///
/// Connected components keep their connectivity and holes; every remaining
/// pixel with more than two neighbors is a junction whose removal would
/// change the topology.
pub fn thin(binary: &BinaryMap) -> BinaryMap {
    let mut map = binary.clone();
    loop {
        loop {
            let mut peeled = false;
            for dir in [(0, -1), (0, 1), (1, 0), (-1, 0)] {
                peeled |= directional_pass(&mut map, dir);
            }
            if !peeled {
                break;
            }
        }
        if !staircase_pass(&mut map) {
            return map;
        }
    }
}

/// Whether every on-pixel with more than two neighbors is a junction.
pub fn is_minimally_connected(map: &BinaryMap) -> bool {
    first_removable_junction(map).is_none()
}

fn first_removable_junction(map: &BinaryMap) -> Option<(usize, usize, usize)> {
    map.on_pixels().find_map(|(x, y)| {
        let n = map.neighbor_count(x, y);
        (n > 2 && is_simple(map, x, y)).then_some((x, y, n))
    })
}

/// Splits a thinned skeleton into pixel chains.
///
/// Pixels with at most two neighbors are linked into chains first; junction
/// pixels are then attached to the end of an adjacent open chain, and
/// junction pixels that touch no chain end form chains of their own. Every
/// skeleton pixel ends up in exactly one chain.
pub fn trace_curves(skeleton: &BinaryMap) -> Result<Vec<CurveChain>> {
    if let Some((x, y, neighbors)) = first_removable_junction(skeleton) {
        return Err(Error::NotThin { x, y, neighbors });
    }
    let (w, h) = skeleton.dims();
    let idx = |x: usize, y: usize| y * w + x;
    let is_path = |x: usize, y: usize| skeleton.neighbor_count(x, y) <= 2;
    let neighbors = |x: usize, y: usize| {
        NEIGHBORS_8.iter().filter_map(move |(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            (skeleton.get_signed(nx, ny)).then_some((nx as usize, ny as usize))
        })
    };
    let mut assigned = vec![false; w * h];
    let mut chains: Vec<CurveChain> = Vec::new();

    let walk = |start: (usize, usize),
                assigned: &mut Vec<bool>,
                eligible: &dyn Fn(usize, usize) -> bool| {
        let mut pixels = vec![start];
        assigned[idx(start.0, start.1)] = true;
        let mut cur = start;
        loop {
            let next = neighbors(cur.0, cur.1)
                .filter(|&(nx, ny)| eligible(nx, ny) && !assigned[idx(nx, ny)])
                .min_by_key(|&(nx, ny)| (nx != cur.0 && ny != cur.1) as u8);
            match next {
                Some(p) => {
                    assigned[idx(p.0, p.1)] = true;
                    pixels.push(p);
                    cur = p;
                }
                None => return pixels,
            }
        }
    };

    // open path runs, starting from their ends
    for (x, y) in skeleton.on_pixels() {
        if assigned[idx(x, y)] || !is_path(x, y) {
            continue;
        }
        let path_neighbors = neighbors(x, y).filter(|&(nx, ny)| is_path(nx, ny)).count();
        if path_neighbors <= 1 {
            let pixels = walk((x, y), &mut assigned, &is_path);
            chains.push(CurveChain {
                pixels,
                closed: false,
            });
        }
    }
    // remaining path pixels lie on cycles
    for (x, y) in skeleton.on_pixels() {
        if assigned[idx(x, y)] || !is_path(x, y) {
            continue;
        }
        let pixels = walk((x, y), &mut assigned, &is_path);
        let (a, b) = (pixels[0], *pixels.last().unwrap());
        let adjacent = a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1;
        let touches_junction = pixels
            .iter()
            .any(|&(px, py)| neighbors(px, py).any(|(nx, ny)| !is_path(nx, ny)));
        chains.push(CurveChain {
            closed: pixels.len() >= 3 && adjacent && !touches_junction,
            pixels,
        });
    }
    // junction pixels: attach to adjacent open chain ends
    let adjacent = |a: (usize, usize), b: (usize, usize)| {
        a != b && a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1
    };
    loop {
        let mut progress = false;
        for (x, y) in skeleton.on_pixels() {
            if assigned[idx(x, y)] {
                continue;
            }
            let p = (x, y);
            for chain in chains.iter_mut().filter(|c| !c.closed) {
                if adjacent(*chain.pixels.last().unwrap(), p) {
                    chain.pixels.push(p);
                } else if adjacent(chain.pixels[0], p) {
                    chain.pixels.insert(0, p);
                } else {
                    continue;
                }
                assigned[idx(x, y)] = true;
                progress = true;
                break;
            }
        }
        if !progress {
            break;
        }
    }
    let any = |_: usize, _: usize| true;
    for (x, y) in skeleton.on_pixels() {
        if !assigned[idx(x, y)] {
            let pixels = walk((x, y), &mut assigned, &any);
            chains.push(CurveChain {
                pixels,
                closed: false,
            });
        }
    }
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MeasureKind;

    fn from_rows(rows: &[&str]) -> BinaryMap {
        let h = rows.len();
        let w = rows[0].len();
        BinaryMap::from_fn(w, h, |x, y| rows[y].as_bytes()[x] == b'#')
    }

    fn chain_map(values: Vec<f64>, w: usize, h: usize) -> MeasureMap {
        MeasureMap::from_values(w, h, values, MeasureKind::Edge).unwrap()
    }

    #[test]
    fn hysteresis_chain() {
        let m = chain_map(vec![0.9, 0.4, 0.4, 0.1], 4, 1);
        let b = hysteresis_threshold(&m, 0.3, 0.8).unwrap();
        assert_eq!(b.mask(), &[true, true, true, false]);
    }

    #[test]
    fn hysteresis_extremes() {
        let m = chain_map(vec![0.2, 0.0, 0.7, 1.0], 2, 2);
        assert_eq!(hysteresis_threshold(&m, 0.0, 0.0).unwrap().count_on(), 4);
        assert!(hysteresis_threshold(&m, 0.0, 1.0 + 1e-9).unwrap().is_empty());
        assert!(hysteresis_threshold(&m, 0.5, 0.4).is_err());
    }

    #[test]
    fn hysteresis_needs_connection() {
        let m = chain_map(vec![0.9, 0.0, 0.5, 0.5], 4, 1);
        let b = hysteresis_threshold(&m, 0.3, 0.8).unwrap();
        assert_eq!(b.mask(), &[true, false, false, false]);
    }

    #[test]
    fn thin_keeps_diagonal() {
        let b = BinaryMap::from_fn(10, 10, |x, y| x == y);
        assert_eq!(thin(&b), b);
    }

    #[test]
    fn thin_empty() {
        let b = BinaryMap::new(7, 5);
        assert!(thin(&b).is_empty());
    }

    #[test]
    fn thin_bar_to_centerline() {
        let b = BinaryMap::from_fn(110, 11, |x, y| (5..105).contains(&x) && (3..8).contains(&y));
        let t = thin(&b);
        let pts: Vec<_> = t.on_pixels().collect();
        assert!(pts.iter().all(|&(_, y)| y == 5), "{pts:?}");
        let min_x = pts.iter().map(|p| p.0).min().unwrap();
        let max_x = pts.iter().map(|p| p.0).max().unwrap();
        assert_eq!(pts.len(), max_x - min_x + 1);
        assert!(min_x.abs_diff(5) <= 1 && max_x.abs_diff(104) <= 1, "{min_x}..{max_x}");
    }

    #[test]
    fn thin_is_minimal_on_blob() {
        let b = BinaryMap::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as f64 - 20.0, y as f64 - 20.0);
            dx * dx + dy * dy < 150.0 || (x > 5 && x < 35 && y == 20)
        });
        let t = thin(&b);
        assert!(!t.is_empty());
        assert!(is_minimally_connected(&t));
        assert_eq!(thin(&t), t);
    }

    #[test]
    fn simple_points() {
        let m = from_rows(&["...", ".##", "..."]);
        assert!(is_simple(&m, 1, 1));
        let m = from_rows(&["...", "###", "..."]);
        assert!(!is_simple(&m, 1, 1));
        let m = from_rows(&["###", "###", "###"]);
        assert!(!is_simple(&m, 1, 1));
    }

    #[test]
    fn plus_gives_four_chains() {
        let plus = BinaryMap::from_fn(9, 9, |x, y| x == 4 || y == 4);
        let chains = trace_curves(&plus).unwrap();
        assert_eq!(chains.len(), 4);
        let total: usize = chains.iter().map(|c| c.len()).sum();
        assert_eq!(total, plus.count_on());
        assert!(chains.iter().all(|c| !c.closed));
    }

    #[test]
    fn ring_is_one_closed_chain() {
        let ring = BinaryMap::from_fn(8, 8, |x, y| {
            (2..=5).contains(&x) && (2..=5).contains(&y) && !((3..=4).contains(&x) && (3..=4).contains(&y))
        });
        let ring = thin(&ring);
        let chains = trace_curves(&ring).unwrap();
        assert_eq!(chains.len(), 1);
        assert!(chains[0].closed);
        assert_eq!(chains[0].len(), ring.count_on());
    }

    #[test]
    fn rejects_thick_input() {
        let blob = BinaryMap::from_fn(6, 6, |x, y| (1..5).contains(&x) && (1..5).contains(&y));
        assert!(matches!(trace_curves(&blob), Err(Error::NotThin { .. })));
        assert!(trace_curves(&BinaryMap::new(5, 5)).unwrap().is_empty());
    }

    #[test]
    fn chains_are_connected_sequences() {
        let b = from_rows(&[
            "..........",
            ".#......#.",
            "..#....#..",
            "...#..#...",
            "....##....",
            "....#.....",
            "....#.....",
            "..........",
        ]);
        let t = thin(&b);
        let chains = trace_curves(&t).unwrap();
        let total: usize = chains.iter().map(|c| c.len()).sum();
        assert_eq!(total, t.count_on());
        for c in &chains {
            for pair in c.pixels.windows(2) {
                assert!(pair[0].0.abs_diff(pair[1].0) <= 1 && pair[0].1.abs_diff(pair[1].1) <= 1);
            }
        }
    }
}
