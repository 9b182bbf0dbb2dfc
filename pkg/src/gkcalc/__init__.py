"""gkcalc: exact equivariant GK calculus for finite-dimensional algebras.

Construction and validation of equivariant algebras, functional modules
and their compact operators; double split exact sequences with concrete
commutation certificates; a certified term-rewriting engine; and the
reduction of arbitrary morphism terms to level-0 representatives with
explicit right-invertible witnesses.
"""

from .fields import Field, RATIONAL, GAUSSIAN, prime_field
from .groups import (FiniteGroup, cyclic_group, klein_four, make_group,
                     symmetric_group_3, trivial_group)
from .algebras import (AlgebraError, AlgebraHom, GAlgebra, base_field_algebra,
                       check_hom, crossed_product, direct_sum,
                       fixed_point_algebra, group_algebra, identity_hom,
                       make_algebra, matrix_algebra, tensor, unitize)
from .modules import (FunctionalModule, adjointable_operators,
                      compact_operators, compacts_over_compacts,
                      external_tensor, free_module, internal_tensor,
                      is_cofull, is_separated, is_weakly_cofull,
                      module_over_self, multiplier_operators,
                      separation_quotient)
from .terms import (CornerEmbedding, GKTerm, RewriteEngine, SplitExactSeq,
                    corner_embedding, corner_inv, delta_gen, hom_gen,
                    hom_functor_split_check, is_level0, level,
                    make_split_exact, rewrite)
from .dses import (DoubleSplitSeq, MSquareA, StandardEDSES, absorb_hom_left,
                   absorb_hom_right, from_delta, from_ring_hom, m_square,
                   negate_edses, pad_module, second_splits, strip_module,
                   sum_edses, to_standard_form, validate_m2_action)
from .nabla import (ReductionResult, as_edses_product, concrete_shadow_check,
                    eliminate_last, embed_finitely_generated, reduce_to_level0)

__all__ = [n for n in dir() if not n.startswith("_")]
