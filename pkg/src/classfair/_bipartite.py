"""Maximum-cardinality bipartite matching (Hopcroft-Karp)."""

from __future__ import annotations

from collections import deque
from typing import Hashable, Sequence

_INF = float("inf")


def hopcroft_karp(adj: Sequence[Sequence[Hashable]]) -> tuple[int, list]:
    """Maximum matching between left vertices ``0..len(adj)-1`` and right vertices.

    ``adj[u]`` lists the right vertices adjacent to left vertex ``u``.  Returns
    the matching size and ``match_left`` where ``match_left[u]`` is the right
    vertex matched to ``u`` or ``None``.
    """
    n_left = len(adj)
    match_left: list = [None] * n_left
    match_right: dict = {}

    # greedy start; on nested neighborhoods this is usually already maximum
    size = 0
    for u in range(n_left):
        for v in adj[u]:
            if v not in match_right:
                match_right[v] = u
                match_left[u] = v
                size += 1
                break
    if size == n_left:
        return size, match_left

    dist = [0.0] * n_left
    while True:
        queue = deque()
        for u in range(n_left):
            if match_left[u] is None:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = _INF
        found = _INF
        while queue:
            u = queue.popleft()
            du = dist[u]
            if du >= found:
                continue
            for v in adj[u]:
                w = match_right.get(v)
                if w is None:
                    if found == _INF:
                        found = du + 1
                elif dist[w] == _INF:
                    dist[w] = du + 1
                    queue.append(w)
        if found == _INF:
            break

        for root in range(n_left):
            if match_left[root] is not None:
                continue
            # iterative layered DFS from a free left vertex
            stack = [(root, iter(adj[root]))]
            path: list[tuple[int, Hashable]] = []
            while stack:
                u, it = stack[-1]
                advanced = False
                for v in it:
                    w = match_right.get(v)
                    if w is None:
                        if dist[u] + 1 == found:
                            path.append((u, v))
                            stack.clear()
                            advanced = True
                            break
                    elif dist[w] == dist[u] + 1:
                        path.append((u, v))
                        stack.append((w, iter(adj[w])))
                        advanced = True
                        break
                if not advanced:
                    dist[u] = _INF
                    stack.pop()
                    if path:
                        path.pop()
            if path and match_right.get(path[-1][1]) is None:
                for u, v in path:
                    match_left[u] = v
                    match_right[v] = u
                size += 1
    return size, match_left


def max_matching_size(adj: Sequence[Sequence[Hashable]]) -> int:
    return hopcroft_karp(adj)[0]
