//! Bounding volume hierarchy over the 3-sigma boxes of a scene's Gaussians.

use crate::scene::{Aabb, Scene, Vec3};

/// Gaussians per leaf, at most.
pub const MAX_LEAF_SIZE: usize = 4;

/// Sigma multiple bounding each Gaussian's box.
pub const BOX_SIGMA: f64 = 3.0;

const PARALLEL_THRESHOLD: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeKind {
    Leaf { start: usize, count: usize },
    Interior { left: usize, right: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

/// Flattened BVH. Node 0 is the root; leaves index into `order`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bvh {
    pub nodes: Vec<Node>,
    pub order: Vec<usize>,
    pub boxes: Vec<Aabb>,
    pub max_leaf_size: usize,
}

enum BuildNode {
    Leaf(Aabb, Vec<usize>),
    Interior(Aabb, Box<BuildNode>, Box<BuildNode>),
}

/// Median split on the longest axis of the centroid bounds, recursing in
/// parallel on large subtrees.
pub fn build_bvh(scene: &Scene) -> Bvh {
    let boxes: Vec<Aabb> = scene.gaussians().iter().map(|g| g.sigma_aabb(BOX_SIGMA)).collect();
    if boxes.is_empty() {
        return Bvh {
            max_leaf_size: MAX_LEAF_SIZE,
            ..Default::default()
        };
    }
    let centroids: Vec<Vec3> = boxes.iter().map(Aabb::center).collect();
    let mut items: Vec<usize> = (0..boxes.len()).collect();
    let root = build_node(&mut items, &boxes, &centroids);

    let mut bvh = Bvh {
        nodes: Vec::with_capacity(2 * boxes.len() / MAX_LEAF_SIZE + 1),
        order: Vec::with_capacity(boxes.len()),
        boxes,
        max_leaf_size: MAX_LEAF_SIZE,
    };
    flatten(root, &mut bvh);
    bvh
}

fn build_node(items: &mut [usize], boxes: &[Aabb], centroids: &[Vec3]) -> BuildNode {
    let bounds = items.iter().fold(Aabb::empty(), |b, &i| b.union(&boxes[i]));
    if items.len() <= MAX_LEAF_SIZE {
        return BuildNode::Leaf(bounds, items.to_vec());
    }
    let cbounds = items.iter().fold(Aabb::empty(), |b, &i| b.grow(&centroids[i]));
    let axis = cbounds.extent().imax();
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    let (left, right) = items.split_at_mut(mid);
    let (l, r) = if left.len() + right.len() > PARALLEL_THRESHOLD {
        rayon::join(
            || build_node(left, boxes, centroids),
            || build_node(right, boxes, centroids),
        )
    } else {
        (build_node(left, boxes, centroids), build_node(right, boxes, centroids))
    };
    BuildNode::Interior(bounds, Box::new(l), Box::new(r))
}

fn flatten(node: BuildNode, bvh: &mut Bvh) -> usize {
    let index = bvh.nodes.len();
    match node {
        BuildNode::Leaf(bounds, items) => {
            let start = bvh.order.len();
            let count = items.len();
            bvh.order.extend(items);
            bvh.nodes.push(Node {
                bounds,
                kind: NodeKind::Leaf { start, count },
            });
        }
        BuildNode::Interior(bounds, l, r) => {
            bvh.nodes.push(Node {
                bounds,
                kind: NodeKind::Interior { left: 0, right: 0 },
            });
            let left = flatten(*l, bvh);
            let right = flatten(*r, bvh);
            bvh.nodes[index].kind = NodeKind::Interior { left, right };
        }
    }
    index
}

impl Bvh {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Indices of Gaussians whose 3-sigma box meets the ray over
    /// `[t_min, t_max]`, in ascending order.
    pub fn candidates(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds.intersects_ray(origin, &inv, t_min, t_max) {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &g in &self.order[start..start + count] {
                        if self.boxes[g].intersects_ray(origin, &inv, t_min, t_max) {
                            out.push(g);
                        }
                    }
                }
                NodeKind::Interior { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{RfAttributes, RfGaussian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scene(n: usize, seed: u64) -> Scene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gs = (0..n)
            .map(|_| {
                RfGaussian::new(
                    Vec3::new(
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-5.0..5.0),
                        rng.random_range(-5.0..5.0),
                    ),
                    Vec3::new(
                        rng.random_range(0.05..0.4),
                        rng.random_range(0.05..0.4),
                        rng.random_range(0.05..0.4),
                    ),
                    Vec3::z(),
                    RfAttributes::default(),
                )
            })
            .collect();
        Scene::from_gaussians(gs)
    }

    #[test]
    fn structural_invariants() {
        let scene = random_scene(300, 3);
        let bvh = build_bvh(&scene);
        let mut seen = bvh.order.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..300).collect::<Vec<_>>());
        for node in &bvh.nodes {
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    assert!(count <= MAX_LEAF_SIZE);
                    for &g in &bvh.order[start..start + count] {
                        assert!(node.bounds.contains_box(&bvh.boxes[g]));
                    }
                }
                NodeKind::Interior { left, right } => {
                    assert!(node.bounds.contains_box(&bvh.nodes[left].bounds));
                    assert!(node.bounds.contains_box(&bvh.nodes[right].bounds));
                }
            }
        }
    }

    #[test]
    fn single_gaussian_is_one_leaf() {
        let scene = random_scene(1, 1);
        let bvh = build_bvh(&scene);
        assert_eq!(bvh.nodes.len(), 1);
        let c = scene.gaussians()[0].mean;
        let origin = c - Vec3::new(10.0, 0.0, 0.0);
        assert_eq!(bvh.candidates(&origin, &Vec3::x(), 0.0, f64::INFINITY), vec![0]);
    }

    #[test]
    fn empty_scene_gives_sentinel() {
        let bvh = build_bvh(&Scene::empty());
        assert!(bvh.is_empty());
        assert!(bvh.candidates(&Vec3::zeros(), &Vec3::x(), 0.0, 1.0).is_empty());
    }

    #[test]
    fn candidates_match_brute_force_boxes() {
        let scene = random_scene(500, 9);
        let bvh = build_bvh(&scene);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..1000 {
            let o = Vec3::new(
                rng.random_range(-6.0..6.0),
                rng.random_range(-6.0..6.0),
                rng.random_range(-6.0..6.0),
            );
            let d = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
            let tmax = rng.random_range(0.5..12.0);
            let inv = d.map(|x| 1.0 / x);
            let brute: Vec<usize> = (0..scene.len())
                .filter(|&i| bvh.boxes[i].intersects_ray(&o, &inv, 0.0, tmax))
                .collect();
            assert_eq!(bvh.candidates(&o, &d, 0.0, tmax), brute);
        }
    }

    #[test]
    fn ray_missing_everything() {
        let scene = random_scene(50, 4);
        let bvh = build_bvh(&scene);
        let o = Vec3::new(100.0, 100.0, 100.0);
        assert!(bvh.candidates(&o, &Vec3::x(), 0.0, f64::INFINITY).is_empty());
    }
}
