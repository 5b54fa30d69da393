"""Forward reachability through the vanishing region, with witness paths.

The limit problem has a positive periodic eigenfunction exactly when every
free node at the bottom of the cylinder reaches every free node at every
later time along paths that move horizontally or up.  This demo contrasts
the two-cylinder weight (paths exist: descend into the subinterval before
the switch) with the staircase (connected but unreachable).

Run:  python3 demos/demo_reachability.py
"""

import perevo

for name in ("du_peng", "counterexample"):
    spec = perevo.builtin_scenario(name)
    mask = perevo.build_mask(spec.weight, spec.grid, spec.tgrid)
    rep = perevo.check_assumption(mask)
    print(f"--- {name}")
    print(f"  slices nonempty: {rep.slices_nonempty}, components: {rep.components}, "
          f"support regular: {rep.regular_support}")
    print(f"  forward path condition: {rep.assumption_holds}")
    if rep.assumption_holds:
        cells = rep.witness.cells
        ok = perevo.validate_witness(mask, rep.witness, cells[0], cells[-1])
        print(f"  witness: {len(cells)} cells from {cells[0]} to {cells[-1]}, "
              f"re-validated: {ok}")
        # sketch the witness inside the cylinder
        marks = {(i, j) for i, j in cells}
        lines = []
        stride_t = max(1, (spec.tgrid.M + 1) // 20)
        for j in range(0, spec.tgrid.M + 1, stride_t):
            row = "".join("*" if (i, j) in marks else
                          ("." if mask.free[i, j] else "#")
                          for i in range(mask.n_nodes))
            lines.append(row[:: max(1, len(row) // 64)])
        print("  (rows = time, '*' = path, '#' = penalized)")
        for line in lines:
            print("   " + line)
    else:
        print(f"  first unreachable pair: {rep.failing_pair}")
    print()
