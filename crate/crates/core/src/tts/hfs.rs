//! Local search by repeated exact minimization over random block trees.

use rand::Rng;

use crate::error::Result;
use crate::instance::{Energy, IsingInstance, SpinConfig};
use crate::tts::blocks::{BlockShape, BlockSolver, DpScratch};

/// Consecutive non-improving trees after which a sweep ends.
pub const DEFAULT_STALL_TREES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HfsOutcome {
    pub energy: Energy,
    pub work: u64,
    pub trees: u64,
}

/// Block-tree local search prepared for one instance.
#[derive(Clone, Debug)]
pub struct Hfs {
    solver: BlockSolver,
    stall_trees: usize,
}

impl Hfs {
    pub fn new(inst: &IsingInstance, shape: BlockShape, stall_trees: usize) -> Self {
        Self {
            solver: BlockSolver::for_instance(inst, shape),
            stall_trees: stall_trees.max(1),
        }
    }

    pub fn scratch(&self) -> DpScratch {
        self.solver.scratch()
    }

    /// Improves `spins` (at energy `energy`) until `stall_trees` random trees
    /// in a row fail to lower the energy.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        spins: &mut [i8],
        energy: Energy,
        rng: &mut R,
        scratch: &mut DpScratch,
    ) -> HfsOutcome {
        let mut out = HfsOutcome {
            energy,
            work: 0,
            trees: 0,
        };
        if self.solver.n_blocks() == 0 {
            return out;
        }
        let mut stall = 0;
        while stall < self.stall_trees {
            let (tree, grow_work) = self.solver.random_tree(rng, scratch);
            let dp = self.solver.solve(&tree, spins, scratch);
            out.work += grow_work + dp.work;
            out.trees += 1;
            if dp.after < dp.before {
                out.energy += dp.after - dp.before;
                stall = 0;
            } else {
                stall += 1;
            }
        }
        out
    }

    /// One sweep from a uniformly random start. Drawing the start costs one
    /// work unit per active spin.
    pub fn restart<R: Rng + ?Sized>(
        &self,
        inst: &IsingInstance,
        rng: &mut R,
        scratch: &mut DpScratch,
    ) -> (SpinConfig, HfsOutcome) {
        let mut config = SpinConfig::random(inst.topology(), rng);
        let energy = inst.energy_of(config.spins());
        let mut out = self.sweep(config.spins_mut(), energy, rng, scratch);
        out.work += inst.topology().n_active() as u64;
        (config, out)
    }
}

/// Single sweep from `config` over unit-cell trees with the default
/// stopping rule.
pub fn hfs_sweep<R: Rng + ?Sized>(
    inst: &IsingInstance,
    config: &mut SpinConfig,
    rng: &mut R,
) -> Result<HfsOutcome> {
    let energy = inst.energy(config)?;
    let hfs = Hfs::new(inst, BlockShape::Cell, DEFAULT_STALL_TREES);
    let mut scratch = hfs.scratch();
    Ok(hfs.sweep(config.spins_mut(), energy, rng, &mut scratch))
}
