"""Pure-numpy shortest-augmenting-path assignment kernel.

This is the fallback twin of the compiled kernel in ``_sap_c.pyx``.  Both
run the same successive-shortest-path algorithm with dual potentials, scan
rows in order, and break ties on the lowest column index, so they return
bit-identical assignments.  Keep the two in sync when touching either.
"""

import numpy as np


def lap_mapping(C: np.ndarray) -> np.ndarray:
    """Minimum-cost assignment of rows to columns of a square finite cost
    matrix.  Returns col_of_row, the assigned column for each row."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    n = C.shape[0]
    u = np.zeros(n)
    v = np.zeros(n)
    col_of_row = np.full(n, -1, dtype=np.int64)
    row_of_col = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return col_of_row

    for cur_row in range(n):
        # Dijkstra over columns, using costs reduced by the dual potentials.
        sp = np.full(n, np.inf)
        path = np.full(n, -1, dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        visited_rows = []
        min_val = 0.0
        i = cur_row
        sink = -1
        while sink == -1:
            visited_rows.append(i)
            rem = np.flatnonzero(~done)
            r = min_val + C[i, rem] - u[i] - v[rem]
            better = r < sp[rem]
            upd = rem[better]
            sp[upd] = r[better]
            path[upd] = i
            # lowest column index wins ties, matching the compiled kernel
            masked = np.where(done, np.inf, sp)
            j = int(np.argmin(masked))
            min_val = float(sp[j])
            done[j] = True
            if row_of_col[j] == -1:
                sink = j
            else:
                i = int(row_of_col[j])

        u[cur_row] += min_val
        for ik in visited_rows:
            if ik != cur_row:
                u[ik] += min_val - sp[col_of_row[ik]]
        scanned = np.flatnonzero(done)
        v[scanned] -= min_val - sp[scanned]

        # augment along the predecessor chain back to cur_row
        j = sink
        while True:
            i = int(path[j])
            row_of_col[j] = i
            col_of_row[i], j = j, int(col_of_row[i])
            if i == cur_row:
                break

    return col_of_row
