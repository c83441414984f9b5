# 総当たりによる参照解（ソルバーとは独立に実装する）
from functools import lru_cache
from itertools import combinations, product

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from streetgraph import Intersection, RoadSegment, build_street_graph


def street_graph_from_nx(graph, length_m=100.0, density_per_m=0.1):
    """networkx のグラフ（ノード 0..n-1）を全区間駐車ありの StreetGraph にする"""
    nodes = [Intersection(i, float(i) * 10.0, 0.0) for i in sorted(graph.nodes)]
    segments = [
        RoadSegment(min(u, v), max(u, v), length_m, density_per_m, True) for u, v in sorted(graph.edges)
    ]
    return build_street_graph(nodes, segments)


def connected_atlas_graphs(max_nodes):
    """graph atlas の連結グラフ（2ノード以上）"""
    for graph in nx.graph_atlas_g():
        n = graph.number_of_nodes()
        if n < 2 or n > max_nodes or graph.number_of_edges() == 0:
            continue
        if nx.is_connected(graph):
            yield graph


def brute_energy(g, ffd, m_ns):
    """区間ごとの整数分割を総当たりして φΩ の最小値を返す（割当不能なら None）"""
    ffd = frozenset(ffd)
    segs = [(s.u, s.v, s.sensors) for s in g.parking_segments]
    for u, v, _ in segs:
        if u not in ffd and v not in ffd:
            return None
    index = {i: pos for pos, i in enumerate(g.node_ids)}

    @lru_cache(maxsize=None)
    def best(idx, loads):
        if idx == len(segs):
            return 0.0
        u, v, total = segs[idx]
        result = None
        for ku in range(total + 1):
            kv = total - ku
            if (ku and u not in ffd) or (kv and v not in ffd):
                continue
            new = list(loads)
            new[index[u]] += ku
            new[index[v]] += kv
            if new[index[u]] > m_ns or new[index[v]] > m_ns:
                continue
            rest = best(idx + 1, tuple(new))
            if rest is None:
                continue
            cost = 0.5 * ku * (ku + 1) + 0.5 * kv * (kv + 1) + rest
            if result is None or cost < result:
                result = cost
        return result

    return best(0, tuple(0 for _ in g.node_ids))


def brute_energy_fractional(g, ffd, m_ns):
    """端数 d·ρ − floor(d·ρ) も M_ns に数えたときの φΩ の最小値（割当不能なら None）

    整数分割を総当たりし、端数の振り分けが可能かを線形計画で確かめる。
    """
    ffd = set(ffd)
    segs = g.parking_segments
    if any(s.u not in ffd and s.v not in ffd for s in segs):
        return None
    fracs = [max(0.0, s.length_m * s.sensor_density_per_m - s.sensors) for s in segs]
    choices = []
    for s in segs:
        options = []
        for ku in range(s.sensors + 1):
            kv = s.sensors - ku
            if (ku and s.u not in ffd) or (kv and s.v not in ffd):
                continue
            options.append((ku, kv))
        choices.append(options)

    nodes = list(g.node_ids)
    best = None
    for split in product(*choices):
        cost = sum(0.5 * ku * (ku + 1) + 0.5 * kv * (kv + 1) for ku, kv in split)
        if best is not None and cost >= best:
            continue
        loads = {i: 0 for i in nodes}
        for s, (ku, kv) in zip(segs, split):
            loads[s.u] += ku
            loads[s.v] += kv
        # 変数は区間ごとに (u 側の端数, v 側の端数)
        a_ub = np.zeros((len(nodes), 2 * len(segs)))
        a_eq = np.zeros((len(segs), 2 * len(segs)))
        bounds = []
        for pos, (s, frac) in enumerate(zip(segs, fracs)):
            a_ub[nodes.index(s.u), 2 * pos] = 1.0
            a_ub[nodes.index(s.v), 2 * pos + 1] = 1.0
            a_eq[pos, 2 * pos] = a_eq[pos, 2 * pos + 1] = 1.0
            bounds.append((0.0, frac if s.u in ffd else 0.0))
            bounds.append((0.0, frac if s.v in ffd else 0.0))
        b_ub = np.array([m_ns - loads[i] for i in nodes], dtype=float)
        result = linprog(
            np.zeros(2 * len(segs)), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=np.array(fracs), bounds=bounds, method="highs"
        )
        if result.status == 0:
            best = cost
    return best


def brute_energy_unbounded(g, ffd):
    """M_ns が効かないときの区間ごとに独立な最小エネルギー"""
    total = 0.0
    for s in g.parking_segments:
        options = []
        for ku in range(s.sensors + 1):
            kv = s.sensors - ku
            if (ku and s.u not in ffd) or (kv and s.v not in ffd):
                continue
            options.append(0.5 * ku * (ku + 1) + 0.5 * kv * (kv + 1))
        if not options:
            return None
        total += min(options)
    return total


def brute_min_cover(g, m_ns=None):
    """M_ns を満たして割当できる最小のFFD集合の大きさ（なければ None）"""
    for size in range(1, g.n + 1):
        for combo in combinations(g.node_ids, size):
            if m_ns is None:
                energy = brute_energy_unbounded(g, set(combo))
            else:
                energy = brute_energy(g, combo, m_ns)
            if energy is not None:
                return size
    return None


def brute_energy_front(g, m_ns=None):
    """FFD数ごとの最小エネルギー {t: φΩ}（m_ns が None なら容量を無視する）"""
    front = {}
    for size in range(1, g.n + 1):
        combos = combinations(g.node_ids, size)
        if m_ns is None:
            values = [brute_energy_unbounded(g, set(combo)) for combo in combos]
        else:
            values = [brute_energy(g, combo, m_ns) for combo in combos]
        values = [v for v in values if v is not None]
        if values:
            front[size] = min(values)
    return front


def brute_min_total_hops(pairs, ffd, budget, m_hop=10, f=None, m_rt=float("inf"), m_gw=float("inf")):
    """ゲートウェイの選び方と親の選び方をすべて試して Σh の最小値を返す（なければ None）"""
    ffd = sorted(ffd)
    f = f or {}
    neighbors = {i: [j for j in ffd if (min(i, j), max(i, j)) in pairs and j != i] for i in ffd}
    best = None
    for gateways in combinations(ffd, budget):
        routers = [i for i in ffd if i not in gateways]
        for choice in product(*(neighbors[i] for i in routers)):
            parent = dict(zip(routers, choice))
            hops = {}
            ok = True
            for i in ffd:
                path = [i]
                while path[-1] in parent:
                    nxt = parent[path[-1]]
                    if nxt in path:
                        ok = False
                        break
                    path.append(nxt)
                if not ok or len(path) > m_hop:
                    ok = False
                    break
                hops[i] = path
            if not ok:
                continue
            load = {j: 0.0 for j in ffd}
            for i, path in hops.items():
                for j in path:
                    load[j] += f.get(i, 0.0)
            if any(load[j] > (m_gw if j in gateways else m_rt) + 1e-9 for j in ffd):
                continue
            total = sum(len(path) for path in hops.values())
            if best is None or total < best:
                best = total
    return best


def nondominated(front):
    """{t: energy} から支配されない (t, energy) を t の昇順で返す"""
    kept = []
    for t in sorted(front):
        if not kept or front[t] < kept[-1][1] - 1e-9:
            kept.append((float(t), front[t]))
    return kept
