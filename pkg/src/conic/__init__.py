from .affine import Affine, scalar_product
from .program import (ConeBlock, ConeKind, ConicModel, ConicProgram, dump_program, embed_hermitian,
                      embed_hermitian_affine, real_stack)
from .solver import ConicSolution, SolverTolerances, SolveStatus, block_residuals, solve
