#include "dgc/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "dgc/errors.hpp"

namespace dgc {

namespace {

std::string bus_label(int id) { return "bus " + std::to_string(id); }

}  // namespace

void GridSystem::validate() const {
  if (!(base_mva > 0.0)) throw ModelError("base_mva must be positive");
  if (!(omega_s > 0.0)) throw ModelError("omega_s must be positive");
  if (buses.empty()) throw ModelError("network has no buses");

  std::map<int, BusType> type_of;
  for (const auto& b : buses) {
    if (!type_of.emplace(b.id, b.type).second)
      throw ModelError("duplicate " + bus_label(b.id));
  }
  auto require_bus = [&](int id, const char* what) {
    if (!type_of.contains(id))
      throw ModelError(std::string(what) + " references unknown " + bus_label(id));
  };

  for (const auto& br : branches) {
    require_bus(br.from, "branch");
    require_bus(br.to, "branch");
    if (br.from == br.to) throw ModelError("branch loops on " + bus_label(br.from));
    if (!(br.x > 0.0)) {
      std::ostringstream os;
      os << "branch " << br.from << "-" << br.to << " has non-positive reactance " << br.x;
      throw ModelError(os.str());
    }
  }

  std::set<int> gen_buses;
  int infinite = 0;
  for (const auto& g : generators) {
    require_bus(g.bus, "generator");
    if (type_of[g.bus] != BusType::generator)
      throw ModelError("generator placed on non-generator " + bus_label(g.bus));
    if (!gen_buses.insert(g.bus).second)
      throw ModelError("more than one generator on " + bus_label(g.bus));
    if (!(g.inertia > 0.0)) throw ModelError("non-positive inertia on " + bus_label(g.bus));
    if (g.infinite_bus) ++infinite;
  }
  for (const auto& [id, type] : type_of) {
    if (type == BusType::generator && !gen_buses.contains(id))
      throw ModelError("generator " + bus_label(id) + " has no machine");
  }
  if (infinite > 1) throw ModelError("more than one infinite bus");

  for (const auto& l : loads) {
    require_bus(l.bus, "load");
    if (type_of[l.bus] != BusType::non_generator)
      throw ModelError("load placed on generator " + bus_label(l.bus));
  }
  std::set<int> cc_seen;
  for (const auto& c : ccs) {
    require_bus(c.bus, "controllable component");
    if (type_of[c.bus] != BusType::non_generator)
      throw ModelError("controllable component placed on generator " + bus_label(c.bus));
    if (!cc_seen.insert(c.bus).second)
      throw ModelError("more than one controllable component on " + bus_label(c.bus));
  }

  // Connectivity over in-service branches.
  std::map<int, std::vector<int>> adj;
  for (const auto& br : branches) {
    if (!br.in_service) continue;
    adj[br.from].push_back(br.to);
    adj[br.to].push_back(br.from);
  }
  std::set<int> seen{buses.front().id};
  std::queue<int> frontier;
  frontier.push(buses.front().id);
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (seen.insert(v).second) frontier.push(v);
    }
  }
  if (seen.size() != type_of.size()) {
    for (const auto& [id, type] : type_of) {
      if (!seen.contains(id)) throw ModelError("network is disconnected at " + bus_label(id));
    }
  }
}

Vector ReducedModel::injection_gain(int bus) const {
  if (bus == infinite_bus) return Vector::Zero(machines());
  for (std::size_t k = 0; k < machine_buses.size(); ++k) {
    if (machine_buses[k] == bus) return Vector::Unit(machines(), static_cast<Eigen::Index>(k));
  }
  for (std::size_t j = 0; j < nongen_buses.size(); ++j) {
    if (nongen_buses[j] == bus) return -b_b.col(static_cast<Eigen::Index>(j));
  }
  throw ModelError("injection at unknown " + bus_label(bus));
}

Matrix ReducedModel::solve_angles(const Matrix& rhs) const {
  Eigen::LLT<Matrix> llt(b_a);
  return llt.solve(rhs);
}

ReducedModel build_reduced_model(const GridSystem& sys) {
  sys.validate();

  const Generator* inf = nullptr;
  for (const auto& g : sys.generators) {
    if (g.infinite_bus) inf = &g;
  }
  if (inf == nullptr)
    throw ModelError("no infinite bus designated; equilibrium angles are undefined");

  ReducedModel m;
  m.omega_s = sys.omega_s;
  m.base_mva = sys.base_mva;
  m.infinite_bus = inf->bus;

  std::map<int, const Generator*> gen_at;
  for (const auto& g : sys.generators) gen_at[g.bus] = &g;
  for (const auto& b : sys.buses) {
    if (b.type == BusType::generator) {
      if (b.id != inf->bus) m.machine_buses.push_back(b.id);
    } else {
      m.nongen_buses.push_back(b.id);
    }
  }
  for (const auto& c : sys.ccs) m.cc_buses.push_back(c.bus);
  if (m.machine_buses.empty()) throw ModelError("no machines besides the infinite bus");

  // Susceptance matrix over all buses; order: machines, non-generator, infinite.
  m.bus_order = m.machine_buses;
  m.bus_order.insert(m.bus_order.end(), m.nongen_buses.begin(), m.nongen_buses.end());
  m.bus_order.push_back(inf->bus);
  std::map<int, Eigen::Index> pos;
  for (std::size_t i = 0; i < m.bus_order.size(); ++i)
    pos[m.bus_order[i]] = static_cast<Eigen::Index>(i);

  const auto n = static_cast<Eigen::Index>(m.bus_order.size());
  m.susceptance = Matrix::Zero(n, n);
  for (const auto& br : sys.branches) {
    if (!br.in_service) continue;
    const double y = 1.0 / br.x;
    const auto i = pos[br.from];
    const auto j = pos[br.to];
    m.susceptance(i, i) += y;
    m.susceptance(j, j) += y;
    m.susceptance(i, j) -= y;
    m.susceptance(j, i) -= y;
  }

  const auto ng = static_cast<Eigen::Index>(m.machine_buses.size());
  const auto nl = static_cast<Eigen::Index>(m.nongen_buses.size());

  // Ground the infinite bus, then Kron-eliminate the non-generator buses one
  // pivot at a time so a singular reduction can name its bus.
  Matrix work = m.susceptance.topLeftCorner(ng + nl, ng + nl);
  const double scale = work.cwiseAbs().maxCoeff();
  for (Eigen::Index k = ng + nl - 1; k >= ng; --k) {
    const double pivot = work(k, k);
    if (!(std::abs(pivot) > 1e-12 * scale)) {
      std::ostringstream os;
      os << "singular network reduction at " << bus_label(m.bus_order[k]) << " (pivot " << pivot
         << ")";
      throw ModelError(os.str());
    }
    work.topLeftCorner(k, k) -= work.topRightCorner(k, ng + nl - k).col(0) *
                                work.bottomLeftCorner(ng + nl - k, k).row(0) / pivot;
  }
  m.b_a = work.topLeftCorner(ng, ng);
  m.b_a = 0.5 * (m.b_a + m.b_a.transpose()).eval();

  if (nl > 0) {
    const Matrix b_ll = m.susceptance.block(ng, ng, nl, nl);
    const Matrix b_lg = m.susceptance.block(ng, 0, nl, ng);
    // B_b = B_gl B_ll^-1 = (B_ll^-1 B_lg)^T.
    m.b_b = b_ll.llt().solve(b_lg).transpose();
  } else {
    m.b_b = Matrix::Zero(ng, 0);
  }

  m.b_c = Matrix::Zero(ng, static_cast<Eigen::Index>(m.cc_buses.size()));
  m.p0 = Vector::Zero(m.b_c.cols());
  for (std::size_t c = 0; c < sys.ccs.size(); ++c) {
    const auto col = pos[sys.ccs[c].bus] - ng;
    m.b_c.col(static_cast<Eigen::Index>(c)) = m.b_b.col(col);
    m.p0(static_cast<Eigen::Index>(c)) = sys.ccs[c].p0;
  }

  m.p_load = Vector::Zero(nl);
  for (const auto& l : sys.loads) m.p_load(pos[l.bus] - ng) += l.p;

  m.inertia.resize(ng);
  m.p_mech.resize(ng);
  for (Eigen::Index k = 0; k < ng; ++k) {
    const Generator* g = gen_at[m.machine_buses[k]];
    m.inertia(k) = g->inertia;
    m.p_mech(k) = g->p_mech;
  }

  Eigen::LLT<Matrix> llt(m.b_a);
  if (llt.info() != Eigen::Success)
    throw ModelError("reduced susceptance matrix is not positive definite");

  m.a = Matrix::Zero(2 * ng, 2 * ng);
  m.a.topRightCorner(ng, ng) = m.omega_s * Matrix::Identity(ng, ng);
  m.a.bottomLeftCorner(ng, ng) = -0.5 * m.inertia.cwiseInverse().asDiagonal() * m.b_a;

  m.x_e.resize(2 * ng);
  m.x_e.head(ng) = llt.solve(m.p_mech + m.b_b * m.p_load - m.b_c * m.p0);
  m.x_e.tail(ng).setOnes();
  return m;
}

StateVector equilibrium_shifted(const ReducedModel& model, const InjectionVector& dp) {
  if (dp.size() != model.cc_count()) {
    throw DimensionError("dp has " + std::to_string(dp.size()) + " entries, model has " +
                         std::to_string(model.cc_count()) + " controllable components");
  }
  StateVector x_c = model.x_e;
  if (dp.size() > 0) angles(x_c) -= model.solve_angles(model.b_c * dp);
  return x_c;
}

}  // namespace dgc
