//! Planar subdivision of the disk induced by a partial chord embedding.
//!
//! The subdivision is a doubly connected edge list without coordinates:
//! every half-edge knows its origin vertex, twin, and the next half-edge
//! counterclockwise along the face on its left. The boundary circle is a
//! cycle of `2k` slot vertices; inserting a chord splits every edge it
//! crosses and splices a chain of chord edges from its low slot to its high
//! slot.
//!
//! A *route* for a chord `c` is the sequence of half-edges an insertion
//! crosses, walking from the face at `c`'s low slot to the face at its high
//! slot. Valid routes cross each already-inserted chord of `crossing_set(c)`
//! exactly once and nothing else. Validity is enforced locally by a
//! direction rule: a route for `c` may cross a half-edge of chord `d` only
//! when the half-edge's orientation (low-to-high flag) equals
//! `start(c) < start(d)`. A route's first crossing of `d` is necessarily
//! from the side of `d` containing `c`'s low slot, and one-directional
//! crossings cannot repeat, so the rule enumerates exactly the valid routes
//! with no crossed-set bookkeeping. It also makes the set of crossed chords
//! a function of the current face, which is what lets
//! [`Embedding::count_insertions`] run as a path count over the face graph.

use crate::error::{Error, Result};
use crate::matching::{ChordId, Matching};
use crate::BigCount;
use rand::Rng;

/// Half-edge index within an [`Embedding`].
pub type EdgeId = u32;

/// Sequence of half-edges a chord insertion crosses, in crossing order.
/// Two routes are distinct exactly when these sequences differ.
pub type Route = Vec<EdgeId>;

const NO_CHORD: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct HalfEdge {
    origin: u32,
    twin: u32,
    next: u32,
    /// Owning chord, or `NO_CHORD` for a boundary arc.
    chord: u32,
    /// For chord edges: points from the low slot toward the high slot.
    /// For boundary arcs: lies on the inner (disk) side.
    forward: bool,
}

/// Undo record for one chord insertion: array lengths to truncate back to
/// plus every overwritten `next`/`twin` field of a surviving edge.
#[derive(Clone)]
struct Frame {
    verts: u32,
    edges: u32,
    writes: Vec<(u32, u8, u32)>,
}

const W_NEXT: u8 = 0;
const W_TWIN: u8 = 1;

/// A partial embedding: the subdivision of the disk by the boundary circle
/// and the chords inserted so far. Obtain the empty one from
/// [`boundary_embedding`] and grow it with [`Embedding::apply_route`].
#[derive(Clone)]
pub struct Embedding {
    k: u32,
    edges: Vec<HalfEdge>,
    /// Per vertex: `(NO_CHORD, slot)` for a boundary slot, else the two
    /// chord ids meeting at the crossing, low id first.
    vert_pair: Vec<(u32, u32)>,
    /// One outgoing half-edge per vertex.
    vert_edge: Vec<u32>,
    /// Inner boundary half-edge from slot `i` to slot `i + 1`.
    boundary: Vec<u32>,
    /// Chord endpoints `(low, high)`, copied from the matching.
    ends: Vec<(u32, u32)>,
    /// Flattened `k x k` crossing relation.
    cross: Vec<bool>,
    inserted: Vec<bool>,
    order: Vec<u32>,
    frames: Vec<Frame>,
}

/// The subdivision holding only the boundary circle of `m`, no chords.
pub fn boundary_embedding(m: &Matching) -> Embedding {
    let k = m.k() as u32;
    let n = 2 * k;
    let mut edges = Vec::with_capacity(2 * n as usize);
    // Inner edge of slot i gets id 2i, its outer twin 2i + 1.
    for i in 0..n {
        let j = (i + 1) % n;
        edges.push(HalfEdge {
            origin: i,
            twin: 2 * i + 1,
            next: 2 * j,
            chord: NO_CHORD,
            forward: true,
        });
        edges.push(HalfEdge {
            origin: j,
            twin: 2 * i,
            next: 2 * ((i + n - 1) % n) + 1,
            chord: NO_CHORD,
            forward: false,
        });
    }
    let mut cross = vec![false; (k * k) as usize];
    for i in 0..m.k() {
        for j in 0..m.k() {
            cross[i * m.k() + j] = m.crosses(i, j);
        }
    }
    Embedding {
        k,
        edges,
        vert_pair: (0..n).map(|s| (NO_CHORD, s)).collect(),
        vert_edge: (0..n).map(|s| 2 * s).collect(),
        boundary: (0..n).map(|s| 2 * s).collect(),
        ends: m
            .pairs()
            .iter()
            .map(|&(a, b)| (a as u32, b as u32))
            .collect(),
        cross,
        inserted: vec![false; k as usize],
        order: Vec::with_capacity(k as usize),
        frames: Vec::with_capacity(k as usize),
    }
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.k as usize
    }

    pub fn points(&self) -> usize {
        2 * self.k as usize
    }

    pub fn num_vertices(&self) -> usize {
        self.vert_pair.len()
    }

    pub fn num_half_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_inserted(&self, c: ChordId) -> bool {
        self.inserted[c]
    }

    pub fn is_complete(&self) -> bool {
        self.order.len() == self.k as usize
    }

    /// Chords inserted so far, in insertion order.
    pub fn inserted_chords(&self) -> Vec<ChordId> {
        self.order.iter().map(|&c| c as ChordId).collect()
    }

    /// The chord pair meeting at each crossing vertex, low id first.
    pub fn crossing_vertices(&self) -> impl Iterator<Item = (ChordId, ChordId)> + '_ {
        self.vert_pair[self.points()..]
            .iter()
            .map(|&(a, b)| (a as ChordId, b as ChordId))
    }

    #[inline]
    fn e(&self, id: u32) -> &HalfEdge {
        &self.edges[id as usize]
    }

    fn crosses(&self, c1: u32, c2: u32) -> bool {
        self.cross[(c1 * self.k + c2) as usize]
    }

    /// Direction rule: whether a route for `c` may cross half-edge `id`.
    #[inline]
    fn crossable(&self, id: u32, c: u32) -> bool {
        let e = self.e(id);
        e.chord != NO_CHORD
            && self.crosses(e.chord, c)
            && e.forward == (self.ends[c as usize].0 < self.ends[e.chord as usize].0)
    }

    fn check_insertable(&self, c: ChordId) -> Result<()> {
        if c >= self.k as usize {
            return Err(Error::validation(format!(
                "chord id {c} out of range 0..{}",
                self.k
            )));
        }
        if self.inserted[c] {
            return Err(Error::validation(format!("chord {c} is already inserted")));
        }
        Ok(())
    }

    /// All valid routes for inserting chord `c`, in walk order.
    pub fn insertion_routes(&self, c: ChordId) -> Result<Vec<Route>> {
        self.check_insertable(c)?;
        let (a, b) = self.ends[c];
        let end = self.boundary[b as usize];
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_routes(c as u32, self.boundary[a as usize], end, &mut path, &mut out);
        Ok(out)
    }

    fn collect_routes(
        &self,
        c: u32,
        anchor: u32,
        end: u32,
        path: &mut Route,
        out: &mut Vec<Route>,
    ) {
        let mut e = self.e(anchor).next;
        while e != anchor {
            if e == end {
                out.push(path.clone());
            } else if self.crossable(e, c) {
                path.push(e);
                self.collect_routes(c, self.e(e).twin, end, path, out);
                path.pop();
            }
            e = self.e(e).next;
        }
    }

    /// Face id per half-edge, and the number of faces.
    fn face_labels(&self) -> (Vec<u32>, u32) {
        let mut face_of = vec![u32::MAX; self.edges.len()];
        let mut nf = 0u32;
        for e0 in 0..self.edges.len() as u32 {
            if face_of[e0 as usize] != u32::MAX {
                continue;
            }
            let mut e = e0;
            loop {
                face_of[e as usize] = nf;
                e = self.e(e).next;
                if e == e0 {
                    break;
                }
            }
            nf += 1;
        }
        (face_of, nf)
    }

    /// Groups the crossable half-edges for `c` by the face they sit on.
    /// Returns `(start_face, end_face, per-face arc lists)`; each arc is
    /// `(edge, target_face)`.
    fn face_graph(&self, c: u32) -> (u32, u32, Vec<Vec<(u32, u32)>>) {
        let (face_of, nf) = self.face_labels();
        let (a, b) = self.ends[c as usize];
        let start = face_of[self.boundary[a as usize] as usize];
        let end = face_of[self.boundary[b as usize] as usize];
        let mut arcs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nf as usize];
        for e in 0..self.edges.len() as u32 {
            if self.crossable(e, c) {
                arcs[face_of[e as usize] as usize]
                    .push((e, face_of[self.e(e).twin as usize]));
            }
        }
        (start, end, arcs)
    }

    /// Number of valid routes for chord `c`, without enumerating them.
    ///
    /// Counts directed paths from the start face to the end face in the
    /// face graph. The direction rule makes this graph acyclic: every arc
    /// crosses one chord in a fixed direction, and once crossed a chord
    /// cannot be recrossed, so any directed walk uses distinct chords.
    pub fn count_insertions(&self, c: ChordId) -> Result<BigCount> {
        self.check_insertable(c)?;
        match self.count_insertions_u128(c)? {
            Some(v) => Ok(BigCount::from(v)),
            None => self.count_insertions_big(c),
        }
    }

    /// Fast path; `None` on u128 overflow (callers fall back to bignum).
    pub(crate) fn count_insertions_u128(&self, c: ChordId) -> Result<Option<u128>> {
        self.check_insertable(c)?;
        let (start, end, arcs) = self.face_graph(c as u32);
        let mut memo: Vec<Option<u128>> = vec![None; arcs.len()];
        Ok(count_rec_u128(start, end, &arcs, &mut memo))
    }

    fn count_insertions_big(&self, c: ChordId) -> Result<BigCount> {
        let (start, end, arcs) = self.face_graph(c as u32);
        let mut memo: Vec<Option<BigCount>> = vec![None; arcs.len()];
        Ok(count_rec_big(start, end, &arcs, &mut memo))
    }

    /// Draws one route uniformly at random among the valid routes for `c`.
    /// Returns `None` when no route exists.
    pub(crate) fn sample_route<R: Rng>(&self, c: ChordId, rng: &mut R) -> Result<Option<Route>> {
        self.check_insertable(c)?;
        let (start, end, arcs) = self.face_graph(c as u32);
        let mut memo: Vec<Option<u128>> = vec![None; arcs.len()];
        let total = count_rec_u128(start, end, &arcs, &mut memo).ok_or_else(|| {
            Error::invariant("route count overflowed u128 during sampling".to_string())
        })?;
        if total == 0 {
            return Ok(None);
        }
        let mut route = Vec::new();
        let mut face = start;
        loop {
            let here = memo[face as usize].unwrap_or(0);
            debug_assert!(here > 0);
            let mut pick = rng.gen_range(0..here);
            if face == end {
                // Sole completion; the end face has no outgoing arcs.
                return Ok(Some(route));
            }
            let mut advanced = false;
            for &(edge, target) in &arcs[face as usize] {
                let w = memo[target as usize].unwrap_or(0);
                if pick < w {
                    route.push(edge);
                    face = target;
                    advanced = true;
                    break;
                }
                pick -= w;
            }
            debug_assert!(advanced, "face counts inconsistent during sampling");
            if !advanced {
                return Err(Error::invariant("route sampling walked off the face graph"));
            }
        }
    }

    /// Returns a new embedding with chord `c` inserted along `route`.
    /// The route must be one of [`Embedding::insertion_routes`].
    pub fn apply_route(&self, c: ChordId, route: &Route) -> Result<Embedding> {
        self.check_insertable(c)?;
        self.validate_route(c, route)?;
        let mut next = self.clone();
        next.insert_route(c, route);
        debug_assert!(next.validate().is_ok());
        Ok(next)
    }

    /// Checks that `route` is reachable by the face walk for `c`.
    fn validate_route(&self, c: ChordId, route: &Route) -> Result<()> {
        let (face_of, _) = self.face_labels();
        let (a, b) = self.ends[c];
        let mut face = face_of[self.boundary[a as usize] as usize];
        for (i, &e) in route.iter().enumerate() {
            if e as usize >= self.edges.len() || !self.crossable(e, c as u32) {
                return Err(Error::validation(format!(
                    "route step {i}: half-edge {e} is not crossable by chord {c}"
                )));
            }
            if face_of[e as usize] != face {
                return Err(Error::validation(format!(
                    "route step {i}: half-edge {e} does not lie on the current face"
                )));
            }
            face = face_of[self.e(e).twin as usize];
        }
        let end_face = face_of[self.boundary[b as usize] as usize];
        if face != end_face {
            return Err(Error::validation(format!(
                "route for chord {c} ends on the wrong face"
            )));
        }
        Ok(())
    }

    fn set_next(&mut self, e: u32, v: u32, frame: &mut Frame) {
        frame.writes.push((e, W_NEXT, self.edges[e as usize].next));
        self.edges[e as usize].next = v;
    }

    fn set_twin(&mut self, e: u32, v: u32, frame: &mut Frame) {
        frame.writes.push((e, W_TWIN, self.edges[e as usize].twin));
        self.edges[e as usize].twin = v;
    }

    fn add_edge(&mut self, origin: u32, twin: u32, next: u32, chord: u32, forward: bool) -> u32 {
        let id = self.edges.len() as u32;
        self.edges.push(HalfEdge { origin, twin, next, chord, forward });
        id
    }

    /// Splits the edge pair of `e` at a new vertex marking the crossing
    /// with chord `c`. Returns `(vertex, continuation, old_twin, new_twin)`
    /// where `continuation` extends `e` and `new_twin` extends `twin(e)`.
    fn split_edge(&mut self, e: u32, c: u32, frame: &mut Frame) -> (u32, u32, u32, u32) {
        let t = self.e(e).twin;
        let v = self.vert_pair.len() as u32;
        let d = self.e(e).chord;
        self.vert_pair.push((d.min(c), d.max(c)));
        // e: u -> v keeps its id; n1: v -> w continues it. On the twin side
        // t: w -> v keeps its id; t2: v -> u continues it.
        let n1 = self.add_edge(v, t, self.e(e).next, d, self.e(e).forward);
        let t2 = self.add_edge(v, e, self.e(t).next, d, self.e(t).forward);
        self.set_next(e, n1, frame);
        self.set_next(t, t2, frame);
        self.set_twin(e, t2, frame);
        self.set_twin(t, n1, frame);
        self.vert_edge.push(n1);
        (v, n1, t, t2)
    }

    /// Inserts chord `c` along `route` in place. The route is trusted; use
    /// [`Embedding::apply_route`] for checked insertion.
    pub(crate) fn insert_route(&mut self, c: ChordId, route: &Route) {
        let c = c as u32;
        let mut frame = Frame {
            verts: self.vert_pair.len() as u32,
            edges: self.edges.len() as u32,
            writes: Vec::with_capacity(4 + 6 * route.len()),
        };
        let (a, b) = self.ends[c as usize];
        let n = 2 * self.k;

        // Split all crossed edges first. splits[j] = (v, n1, t, t2).
        let splits: Vec<(u32, u32, u32, u32)> = route
            .iter()
            .map(|&e| self.split_edge(e, c, &mut frame))
            .collect();

        // Chord chain vertices: slot a, crossing vertices, slot b.
        let mut chain = Vec::with_capacity(route.len() + 2);
        chain.push(a);
        chain.extend(splits.iter().map(|s| s.0));
        chain.push(b);

        // Allocate the chord half-edges: f[j] forward (toward b), g[j] back.
        let m = chain.len() - 1;
        let mut f = Vec::with_capacity(m);
        let mut g = Vec::with_capacity(m);
        for j in 0..m {
            let fid = self.add_edge(chain[j], 0, 0, c, true);
            let gid = self.add_edge(chain[j + 1], fid, 0, c, false);
            self.edges[fid as usize].twin = gid;
            f.push(fid);
            g.push(gid);
        }

        // Splice at the low slot: the chain leaves between the boundary
        // edges arriving at and departing from slot a.
        let b_prev_a = self.boundary[((a + n - 1) % n) as usize];
        self.set_next(b_prev_a, f[0], &mut frame);
        self.set_next(g[0], self.boundary[a as usize], &mut frame);

        // Splice at each crossing: the walk crossed `route[j]` from its own
        // face into its twin's face.
        for (j, &(_, n1, t, t2)) in splits.iter().enumerate() {
            self.set_next(f[j], n1, &mut frame);
            self.set_next(route[j], g[j], &mut frame);
            self.set_next(t, f[j + 1], &mut frame);
            self.set_next(g[j + 1], t2, &mut frame);
        }

        // Splice at the high slot.
        let b_prev_b = self.boundary[((b + n - 1) % n) as usize];
        self.set_next(f[m - 1], self.boundary[b as usize], &mut frame);
        self.set_next(b_prev_b, g[m - 1], &mut frame);

        self.inserted[c as usize] = true;
        self.order.push(c);
        self.frames.push(frame);
    }

    /// Reverts the most recent [`Embedding::insert_route`].
    pub(crate) fn undo_last(&mut self) {
        let frame = self.frames.pop().expect("no insertion to undo");
        let c = self.order.pop().expect("no insertion to undo");
        self.inserted[c as usize] = false;
        self.edges.truncate(frame.edges as usize);
        self.vert_pair.truncate(frame.verts as usize);
        self.vert_edge.truncate(frame.verts as usize);
        for &(e, field, old) in frame.writes.iter().rev() {
            if e >= frame.edges {
                continue;
            }
            match field {
                W_NEXT => self.edges[e as usize].next = old,
                _ => self.edges[e as usize].twin = old,
            }
        }
    }

    /// Structural self-check: twin involution, next is a permutation whose
    /// cycles respect edge targets, and the Euler relation.
    pub fn validate(&self) -> Result<()> {
        let ne = self.edges.len();
        let mut pred = vec![0usize; ne];
        for id in 0..ne as u32 {
            let e = self.e(id);
            let t = self.e(e.twin);
            if t.twin != id {
                return Err(Error::invariant(format!("twin of {id} is not involutive")));
            }
            if e.chord != t.chord || e.forward == t.forward {
                return Err(Error::invariant(format!("twin of {id} disagrees on chord data")));
            }
            // The next edge must leave the vertex this edge points at.
            let target = self.e(e.twin).origin;
            if self.e(e.next).origin != target {
                return Err(Error::invariant(format!("next of {id} leaves the wrong vertex")));
            }
            pred[e.next as usize] += 1;
        }
        if pred.iter().any(|&p| p != 1) {
            return Err(Error::invariant("next is not a permutation".to_string()));
        }
        let (_, nf) = self.face_labels();
        let v = self.vert_pair.len() as i64;
        let e = (ne / 2) as i64;
        let f = nf as i64;
        if v - e + f != 2 {
            return Err(Error::invariant(format!(
                "Euler relation failed: V={v} E={e} F={f}"
            )));
        }
        Ok(())
    }

    /// The chirotope over the inserted chords: for every ordered pair of
    /// crossing chords and every third chord, the side of the third chord's
    /// chain the crossing vertex lies on (+1 left of its low-to-high
    /// orientation, -1 right). Equal chirotopes mean isomorphic
    /// arrangements.
    pub fn chirotope(&self) -> Chirotope {
        let k = self.k as usize;
        let (face_of, nf) = self.face_labels();
        // Face adjacency across chord edges, labeled by chord.
        let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nf as usize];
        for id in 0..self.edges.len() as u32 {
            let e = self.e(id);
            if e.chord != NO_CHORD {
                adj[face_of[id as usize] as usize]
                    .push((face_of[e.twin as usize], e.chord));
            }
        }
        let mut signs = vec![0i8; pair_count(k) * k];
        let mut side = vec![0i8; nf as usize];
        for &c3 in &self.order {
            // Seed sides from c3's own chain, flood across other chords.
            side.iter_mut().for_each(|s| *s = 0);
            let mut queue = Vec::new();
            for id in 0..self.edges.len() as u32 {
                let e = self.e(id);
                if e.chord == c3 {
                    let fc = face_of[id as usize] as usize;
                    if side[fc] == 0 {
                        side[fc] = if e.forward { 1 } else { -1 };
                        queue.push(fc);
                    }
                }
            }
            while let Some(fc) = queue.pop() {
                for &(g, chord) in &adj[fc] {
                    if chord != c3 && side[g as usize] == 0 {
                        side[g as usize] = side[fc];
                        queue.push(g as usize);
                    }
                }
            }
            for v in self.points()..self.num_vertices() {
                let (c1, c2) = self.vert_pair[v];
                if c1 == c3 || c2 == c3 {
                    continue;
                }
                let s = side[face_of[self.vert_edge[v] as usize] as usize];
                debug_assert!(s != 0);
                signs[pair_index(c1 as usize, c2 as usize, k) * k + c3 as usize] = s;
            }
        }
        Chirotope { k, signs }
    }
}

fn count_rec_u128(
    face: u32,
    end: u32,
    arcs: &[Vec<(u32, u32)>],
    memo: &mut [Option<u128>],
) -> Option<u128> {
    if let Some(v) = memo[face as usize] {
        return Some(v);
    }
    let mut total: u128 = if face == end { 1 } else { 0 };
    for &(_, target) in &arcs[face as usize] {
        let sub = count_rec_u128(target, end, arcs, memo)?;
        total = total.checked_add(sub)?;
    }
    memo[face as usize] = Some(total);
    Some(total)
}

fn count_rec_big(
    face: u32,
    end: u32,
    arcs: &[Vec<(u32, u32)>],
    memo: &mut [Option<BigCount>],
) -> BigCount {
    if let Some(v) = &memo[face as usize] {
        return v.clone();
    }
    let mut total = if face == end {
        BigCount::from(1u32)
    } else {
        BigCount::from(0u32)
    };
    for &(_, target) in &arcs[face as usize] {
        total += count_rec_big(target, end, arcs, memo);
    }
    memo[face as usize] = Some(total.clone());
    total
}

fn pair_count(k: usize) -> usize {
    k * (k - 1) / 2
}

fn pair_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j);
    i * k - i * (i + 1) / 2 + (j - i - 1)
}

/// Isomorphism invariant of an embedding; see [`Embedding::chirotope`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chirotope {
    k: usize,
    signs: Vec<i8>,
}

impl Chirotope {
    /// Sign for the ordered triple `(c1, c2, c3)` of distinct chords:
    /// `None` when `c1` and `c2` do not cross, otherwise the side of `c3`
    /// the crossing of `c1` and `c2` lies on. Symmetric in `c1, c2`.
    pub fn sign(&self, c1: ChordId, c2: ChordId, c3: ChordId) -> Option<i8> {
        assert!(c1 != c2 && c1 != c3 && c2 != c3, "triple must be distinct");
        let (i, j) = (c1.min(c2), c1.max(c2));
        match self.signs[pair_index(i, j, self.k) * self.k + c3] {
            0 => None,
            s => Some(s),
        }
    }

    /// Compact byte view, suitable for hashing into digests.
    pub fn as_bytes(&self) -> &[i8] {
        &self.signs
    }
}
