#include "explore/network.hpp"

#include <algorithm>
#include <cstring>

namespace explore {

std::vector<std::vector<int>> CommGraph::components() const {
    std::vector<std::vector<int>> out;
    std::vector<char> seen(n, 0);
    for (int s = 0; s < n; ++s) {
        if (seen[s]) continue;
        std::vector<int> comp{s};
        seen[s] = 1;
        for (std::size_t k = 0; k < comp.size(); ++k)
            for (int j = 0; j < n; ++j)
                if (!seen[j] && connected(comp[k], j)) {
                    seen[j] = 1;
                    comp.push_back(j);
                }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    return out;
}

CommGraph comm_graph(const std::vector<Vec2>& positions, double range, bool multi_hop) {
    CommGraph cg;
    cg.n = static_cast<int>(positions.size());
    cg.adj.assign(static_cast<std::size_t>(cg.n) * cg.n, 0);
    for (int i = 0; i < cg.n; ++i)
        for (int j = i + 1; j < cg.n; ++j)
            if (dist(positions[i], positions[j]) <= range)
                cg.adj[i * cg.n + j] = cg.adj[j * cg.n + i] = 1;
    if (multi_hop) {
        for (const auto& comp : cg.components())
            for (std::size_t a = 0; a < comp.size(); ++a)
                for (std::size_t b = a + 1; b < comp.size(); ++b)
                    cg.adj[comp[a] * cg.n + comp[b]] =
                        cg.adj[comp[b] * cg.n + comp[a]] = 1;
    }
    return cg;
}

namespace {

constexpr std::uint32_t kMagic = 0x544f504f;  // "OPOT"
constexpr std::uint16_t kVersion = 1;

struct Writer {
    std::vector<std::uint8_t> buf;
    template <typename T>
    void put(T v) {
        const std::size_t at = buf.size();
        buf.resize(at + sizeof(T));
        std::memcpy(buf.data() + at, &v, sizeof(T));
    }
    void put_bytes(const void* p, std::size_t n) {
        const std::size_t at = buf.size();
        buf.resize(at + n);
        std::memcpy(buf.data() + at, p, n);
    }
};

struct Reader {
    const std::uint8_t* p;
    std::size_t left;
    bool ok = true;
    template <typename T>
    T get() {
        T v{};
        if (left < sizeof(T)) {
            ok = false;
            return v;
        }
        std::memcpy(&v, p, sizeof(T));
        p += sizeof(T);
        left -= sizeof(T);
        return v;
    }
    bool get_bytes(void* dst, std::size_t n) {
        if (left < n) {
            ok = false;
            return false;
        }
        std::memcpy(dst, p, n);
        p += n;
        left -= n;
        return true;
    }
};

}  // namespace

std::vector<std::uint8_t> Message::serialize() const {
    Writer w;
    w.put(kMagic);
    w.put(kVersion);
    w.put(sender);
    w.put(tick);
    w.put(load);

    w.put(static_cast<std::int32_t>(belief.width));
    w.put(static_cast<std::int32_t>(belief.height));
    w.put(belief.resolution);
    w.put_bytes(belief.cells.data(), belief.cells.size());

    w.put(static_cast<std::uint32_t>(graph.node_count()));
    for (const auto& [id, n] : graph.nodes()) {
        w.put(static_cast<std::int64_t>(id));
        w.put(static_cast<std::uint8_t>(n.kind));
        w.put(n.pos.x);
        w.put(n.pos.y);
        w.put(static_cast<std::int64_t>(n.dual_of));
    }
    w.put(static_cast<std::uint32_t>(graph.edge_count()));
    for (const auto& [key, e] : graph.edges()) {
        (void)key;
        w.put(static_cast<std::int64_t>(e.a));
        w.put(static_cast<std::int64_t>(e.b));
        w.put(static_cast<std::uint8_t>(e.certainty));
    }
    return w.buf;
}

std::optional<Message> Message::deserialize(const std::vector<std::uint8_t>& bytes) {
    Reader r{bytes.data(), bytes.size()};
    if (r.get<std::uint32_t>() != kMagic) return std::nullopt;
    if (r.get<std::uint16_t>() != kVersion) return std::nullopt;
    Message m;
    m.sender = r.get<std::uint32_t>();
    m.tick = r.get<std::uint64_t>();
    m.load = r.get<double>();

    const std::int32_t w = r.get<std::int32_t>();
    const std::int32_t h = r.get<std::int32_t>();
    const double res = r.get<double>();
    if (!r.ok || w <= 0 || h <= 0 || !(res > 0.0)) return std::nullopt;
    if (r.left < static_cast<std::size_t>(w) * h) return std::nullopt;
    m.belief = OccupancyGrid(w, h, res);
    if (!r.get_bytes(m.belief.cells.data(), m.belief.cells.size())) return std::nullopt;
    for (Cell c : m.belief.cells)
        if (c != Cell::Unknown && c != Cell::Free && c != Cell::Occupied)
            return std::nullopt;

    const std::uint32_t n_nodes = r.get<std::uint32_t>();
    if (!r.ok || n_nodes > 1u << 22) return std::nullopt;
    for (std::uint32_t i = 0; i < n_nodes; ++i) {
        TopoNode n;
        n.id = r.get<std::int64_t>();
        const std::uint8_t kind = r.get<std::uint8_t>();
        n.pos.x = r.get<double>();
        n.pos.y = r.get<double>();
        n.dual_of = r.get<std::int64_t>();
        if (!r.ok || kind > 2) return std::nullopt;
        n.kind = static_cast<NodeKind>(kind);
        if (m.graph.has_node(n.id)) return std::nullopt;
        m.graph.add_node(n);
    }
    const std::uint32_t n_edges = r.get<std::uint32_t>();
    if (!r.ok || n_edges > 1u << 22) return std::nullopt;
    for (std::uint32_t i = 0; i < n_edges; ++i) {
        const std::int64_t a = r.get<std::int64_t>();
        const std::int64_t b = r.get<std::int64_t>();
        const std::uint8_t cert = r.get<std::uint8_t>();
        if (!r.ok || cert > 1) return std::nullopt;
        if (!m.graph.has_node(a) || !m.graph.has_node(b) || a == b) return std::nullopt;
        m.graph.add_edge(a, b, static_cast<EdgeCertainty>(cert));
    }
    if (r.left != 0) return std::nullopt;
    return m;
}

void fuse_belief(OccupancyGrid& dst, const OccupancyGrid& src) {
    for (std::size_t i = 0; i < dst.cells.size(); ++i)
        if (dst.cells[i] == Cell::Unknown) dst.cells[i] = src.cells[i];
}

FuseStats exchange_and_fuse(const CommGraph& cg, std::uint64_t tick,
                            std::vector<OccupancyGrid>& beliefs,
                            const std::vector<const HybridTopoGraph*>& own_graphs,
                            const std::vector<double>& loads, double merge_radius,
                            std::vector<HybridTopoGraph>& fused,
                            std::vector<double>* heard_loads) {
    const int n = cg.n;
    FuseStats stats;
    std::vector<std::vector<std::uint8_t>> wire(n);
    for (int i = 0; i < n; ++i) {
        Message m;
        m.sender = static_cast<std::uint32_t>(i);
        m.tick = tick;
        m.belief = beliefs[i];
        m.graph = *own_graphs[i];
        m.load = loads[i];
        wire[i] = m.serialize();
    }
    fused.assign(n, HybridTopoGraph{});
    if (heard_loads) heard_loads->assign(static_cast<std::size_t>(n) * n, 0.0);

    for (int i = 0; i < n; ++i) {
        std::vector<Message> heard;
        for (int j = 0; j < n; ++j) {
            if (j == i || !cg.connected(i, j)) continue;
            stats.bytes_sent += wire[j].size();
            auto m = Message::deserialize(wire[j]);
            if (!m) {
                ++stats.dropped;
                continue;
            }
            ++stats.delivered;
            heard.push_back(std::move(*m));
        }
        std::vector<const HybridTopoGraph*> their;
        for (const Message& m : heard) {
            fuse_belief(beliefs[i], m.belief);
            their.push_back(&m.graph);
            if (heard_loads) (*heard_loads)[i * n + m.sender] = m.load;
        }
        fused[i] = merge_graphs(*own_graphs[i], their, merge_radius);
    }
    return stats;
}

}  // namespace explore
