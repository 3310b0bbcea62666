# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled shortest-augmenting-path assignment kernel.

Twin of ``_sap_py.lap_mapping``: same algorithm, same row scan order, same
lowest-column tie-breaking, same double arithmetic, so both backends return
bit-identical assignments.  Keep the two in sync when touching either.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lap_mapping(object cost):
    """Minimum-cost assignment of rows to columns of a square finite cost
    matrix.  Returns col_of_row, the assigned column for each row."""
    C_arr = np.ascontiguousarray(cost, dtype=np.float64)
    cdef double[:, ::1] C = C_arr
    cdef Py_ssize_t n = C.shape[0]

    col_of_row_arr = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return col_of_row_arr

    cdef cnp.int64_t[::1] col_of_row = col_of_row_arr
    cdef cnp.int64_t[::1] row_of_col = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] path = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] visited_rows = np.empty(n + 1, dtype=np.int64)
    cdef double[::1] u = np.zeros(n)
    cdef double[::1] v = np.zeros(n)
    cdef double[::1] sp = np.empty(n)
    cdef cnp.uint8_t[::1] done = np.empty(n, dtype=np.uint8)

    cdef Py_ssize_t cur_row, i, j, k, sink, n_visited
    cdef double min_val, r, best, inf = np.inf

    for cur_row in range(n):
        for j in range(n):
            sp[j] = inf
            path[j] = -1
            done[j] = 0
        n_visited = 0
        min_val = 0.0
        i = cur_row
        sink = -1
        while sink == -1:
            visited_rows[n_visited] = i
            n_visited += 1
            for j in range(n):
                if done[j]:
                    continue
                r = min_val + C[i, j] - u[i] - v[j]
                if r < sp[j]:
                    sp[j] = r
                    path[j] = i
            # lowest column index wins ties, matching the numpy kernel
            j = -1
            best = inf
            for k in range(n):
                if not done[k] and sp[k] < best:
                    best = sp[k]
                    j = k
            min_val = sp[j]
            done[j] = 1
            if row_of_col[j] == -1:
                sink = j
            else:
                i = row_of_col[j]

        u[cur_row] += min_val
        for k in range(n_visited):
            i = visited_rows[k]
            if i != cur_row:
                u[i] += min_val - sp[col_of_row[i]]
        for j in range(n):
            if done[j]:
                v[j] -= min_val - sp[j]

        # augment along the predecessor chain back to cur_row
        j = sink
        while True:
            i = path[j]
            row_of_col[j] = i
            k = col_of_row[i]
            col_of_row[i] = j
            j = k
            if i == cur_row:
                break

    return col_of_row_arr
