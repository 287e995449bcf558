"""Bundled reference SMT solver for the linear-arithmetic fragment the
emitter produces (QF_LRA / QF_LIA / QF_LIRA with boolean structure, ite and
let). It speaks SMT-LIB 2 text on stdin/stdout, so it plugs into the same
subprocess protocol as any external solver; point `--solver` at z3 or cvc5
when one is available.

Architecture: clause learning SAT over a boolean skeleton, with theory
atoms dispatched to an incremental exact-rational simplex using
delta-rationals for strict bounds. Integer feasibility uses bound
tightening plus valid split cuts under a budget; exhausting the budget
reports `unknown`, never a wrong verdict.
"""
