//! Movement graph over walkable tiles and minimal-hop pathfinding.

use super::{coords, idx, Entity, Level, DIRS, GRID, TILES};

/// Directed adjacency over walkable tiles.
///
/// Edges: undirected between 4-adjacent same-elevation walkable tiles,
/// bidirectional between a stairs tile and its designated first-floor tile,
/// and one-way from a first-floor tile down to each 4-adjacent ground tile.
/// Adjacency lists are sorted so traversals are deterministic.
#[derive(Debug, Clone)]
pub struct MovementGraph {
    adj: Vec<Vec<u16>>,
    radj: Vec<Vec<u16>>,
    walkable: Vec<bool>,
}

impl MovementGraph {
    pub fn build(level: &Level) -> MovementGraph {
        MovementGraph::build_oriented(level, false)
    }

    /// Like [`MovementGraph::build`], but with adjacency (and therefore all
    /// tie-breaking) ordered by descending node index. Under the grid's
    /// 180-degree rotation, index order reverses exactly, so a mirrored
    /// traversal on the mirrored level makes the same choices. The simulator
    /// gives player 2 this egocentric graph so that neither player's
    /// pathing is biased toward a map corner.
    pub fn build_flipped(level: &Level) -> MovementGraph {
        MovementGraph::build_oriented(level, true)
    }

    fn build_oriented(level: &Level, flipped: bool) -> MovementGraph {
        let mut adj = vec![Vec::new(); TILES];
        let walkable: Vec<bool> = (0..TILES).map(|i| level.tile_at(i).walkable()).collect();

        for i in 0..TILES {
            if !walkable[i] {
                continue;
            }
            let (x, y) = coords(i);
            let elev = level.tile_at(i).elevation;
            let stairs_to = level.stairs_target(x, y).map(|(tx, ty)| idx(tx, ty));
            for (dx, dy) in DIRS {
                let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                if nx < 0 || ny < 0 || nx >= GRID as i32 || ny >= GRID as i32 {
                    continue;
                }
                let n = idx(nx as usize, ny as usize);
                if !walkable[n] {
                    continue;
                }
                let nelev = level.tile_at(n).elevation;
                let edge = if nelev == elev {
                    true
                } else if elev == 1 && nelev == 0 {
                    true // jump down, one way
                } else {
                    // up only via stairs to the designated tile
                    elev == 0 && level.tile_at(i).entity == Entity::Stairs && stairs_to == Some(n)
                };
                if edge {
                    adj[i].push(n as u16);
                }
            }
            if flipped {
                adj[i].sort_unstable_by(|a, b| b.cmp(a));
            } else {
                adj[i].sort_unstable();
            }
        }

        let mut radj = vec![Vec::new(); TILES];
        for (i, outs) in adj.iter().enumerate() {
            for &n in outs {
                radj[n as usize].push(i as u16);
            }
        }
        for r in &mut radj {
            if flipped {
                r.sort_unstable_by(|a, b| b.cmp(a));
            } else {
                r.sort_unstable();
            }
        }

        MovementGraph { adj, radj, walkable }
    }

    pub fn is_node(&self, i: usize) -> bool {
        self.walkable[i]
    }

    pub fn node_count(&self) -> usize {
        self.walkable.iter().filter(|w| **w).count()
    }

    pub fn neighbors(&self, i: usize) -> &[u16] {
        &self.adj[i]
    }

    /// Minimal-hop path from `from` to `to`, excluding `from` itself.
    /// BFS over sorted adjacency: ties break toward lower node indices.
    /// `None` if unreachable, `Some(vec![])` if `from == to`.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<u16>> {
        if !self.walkable[from] || !self.walkable[to] {
            return None;
        }
        if from == to {
            return Some(Vec::new());
        }
        let mut parent = vec![u16::MAX; TILES];
        parent[from] = from as u16;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(from as u16);
        while let Some(cur) = queue.pop_front() {
            if cur as usize == to {
                break;
            }
            for &n in &self.adj[cur as usize] {
                if parent[n as usize] == u16::MAX {
                    parent[n as usize] = cur;
                    queue.push_back(n);
                }
            }
        }
        if parent[to] == u16::MAX {
            return None;
        }
        let mut path = Vec::new();
        let mut cur = to;
        while cur != from {
            path.push(cur as u16);
            cur = parent[cur] as usize;
        }
        path.reverse();
        Some(path)
    }

    /// BFS distances from `from` over forward edges. `u16::MAX` marks
    /// unreachable tiles; parents allow path reconstruction.
    pub fn distance_field(&self, from: usize, dist: &mut [u16], parent: &mut [u16]) {
        dist.fill(u16::MAX);
        parent.fill(u16::MAX);
        if !self.walkable[from] {
            return;
        }
        dist[from] = 0;
        parent[from] = from as u16;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(from as u16);
        while let Some(cur) = queue.pop_front() {
            let d = dist[cur as usize];
            for &n in &self.adj[cur as usize] {
                if dist[n as usize] == u16::MAX {
                    dist[n as usize] = d + 1;
                    parent[n as usize] = cur;
                    queue.push_back(n);
                }
            }
        }
    }

    /// Tiles reachable from `start` following forward edges.
    pub fn reachable_from(&self, start: usize) -> Vec<bool> {
        self.flood(start, &self.adj)
    }

    /// Tiles from which `target` is reachable (flood over reversed edges).
    pub fn reachable_to(&self, target: usize) -> Vec<bool> {
        self.flood(target, &self.radj)
    }

    fn flood(&self, start: usize, adj: &[Vec<u16>]) -> Vec<bool> {
        let mut seen = vec![false; TILES];
        if !self.walkable[start] {
            return seen;
        }
        seen[start] = true;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start as u16);
        while let Some(cur) = queue.pop_front() {
            for &n in &adj[cur as usize] {
                if !seen[n as usize] {
                    seen[n as usize] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }
}
