// Python surface of the ledger core. Structured values cross the boundary as JSON
// text; the chainvoice package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "chainvoice/contract.hpp"
#include "chainvoice/ledger.hpp"
#include "chainvoice/replication.hpp"
#include "chainvoice/service/storage.hpp"
#include "chainvoice/views.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace chainvoice;

namespace {

Transaction parse_tx(const std::string& text) { return transaction_from_json(json::parse(text)); }

std::vector<Transaction> parse_txs(const std::vector<std::string>& texts) {
  std::vector<Transaction> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(parse_tx(t));
  return out;
}

Role parse_role_or_throw(const std::string& text) {
  auto role = parse_role(text);
  if (!role) throw py::value_error("unknown role: " + text);
  return *role;
}

std::string chain_to_jsonl(const ledger::Chain& chain) {
  std::ostringstream out;
  ledger::write_jsonl(out, chain);
  return out.str();
}

json view_error(const views::ViewError& e) {
  return {{"error", to_string(e.code)}, {"detail", e.detail}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "chainvoice ledger core";

  py::register_exception<ledger::CorruptRecord>(m, "CorruptRecord", PyExc_ValueError);
  py::register_exception<DecodeError>(m, "DecodeError", PyExc_ValueError);
  py::register_exception<replication::InvalidScenario>(m, "InvalidScenario", PyExc_ValueError);
  py::register_exception<nlohmann::json::exception>(m, "JsonError", PyExc_ValueError);

  m.def("tx_hash", [](const std::string& tx) { return tx_hash(parse_tx(tx)).hex(); });
  m.def("encode_tx", [](const std::string& tx) {
    const Bytes b = encode(parse_tx(tx));
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
  });
  m.def("tx_root", [](const std::vector<std::string>& txs) { return ledger::compute_tx_root(parse_txs(txs)).hex(); });

  py::class_<ledger::Chain>(m, "Chain")
      .def_static("genesis", [](const std::string& id, std::uint64_t ts) { return ledger::genesis(id, ts); },
                  py::arg("chain_id"), py::arg("timestamp"))
      .def_static(
          "from_jsonl",
          [](const std::string& text, const std::string& id) {
            std::istringstream in(text);
            return ledger::read_jsonl(in, id);
          },
          py::arg("text"), py::arg("chain_id") = "")
      .def("to_jsonl", &chain_to_jsonl)
      .def(
          "append",
          [](const ledger::Chain& c, const std::vector<std::string>& txs, const std::string& proposer,
             std::uint64_t ts) { return ledger::append_block(c, parse_txs(txs), proposer, ts); },
          py::arg("transactions"), py::arg("proposer"), py::arg("timestamp"))
      .def_property_readonly("height", &ledger::Chain::height)
      .def_property_readonly("tip_hash", [](const ledger::Chain& c) { return c.tip().block_hash.hex(); })
      .def("header", [](const ledger::Chain& c, std::size_t h) { return ledger::to_json(c.at(h)).dump(); })
      .def("validate",
           [](const ledger::Chain& c) -> std::optional<std::pair<std::uint64_t, std::string>> {
             auto v = ledger::validate_chain(c);
             if (!v) return std::nullopt;
             return std::make_pair(v->height, std::string(to_string(v->reason)));
           })
      .def("__len__", &ledger::Chain::size);

  py::class_<contract::ContractState>(m, "ContractState")
      .def(py::init<>())
      .def_static("replay", &contract::replay)
      .def(
          "apply",
          [](contract::ContractState& s, const std::string& tx, std::uint64_t height) {
            auto r = s.apply(parse_tx(tx), height);
            if (!r) return json{{"ok", false}, {"error", to_string(r.error().code)}, {"detail", r.error().detail}}.dump();
            json events = json::array();
            for (const auto& e : r.value()) events.push_back(contract::to_json(e));
            return json{{"ok", true}, {"events", events}}.dump();
          },
          py::arg("tx"), py::arg("height"))
      .def("snapshot", [](const contract::ContractState& s) { return s.snapshot().dump(); })
      .def("digest", [](const contract::ContractState& s) { return s.digest().hex(); })
      .def_property_readonly("bill_counter", &contract::ContractState::bill_counter)
      .def_property_readonly("total_balance", &contract::ContractState::total_balance);

  m.def("visible_records", [](const ledger::Chain& c, const std::string& viewer, const std::string& role) {
    auto r = views::visible_records(c, viewer, parse_role_or_throw(role));
    if (!r) return view_error(r.error()).dump();
    json out = json::array();
    for (const auto& rec : r.value()) out.push_back({{"height", rec.height}, {"tx", to_json(rec.tx)}});
    return json{{"records", out}}.dump();
  });
  m.def("tax_report", [](const ledger::Chain& c, const std::string& seller, const std::string& period) {
    auto r = views::tax_report(c, seller, period);
    return (r ? views::to_json(r.value()) : view_error(r.error())).dump();
  });
  m.def("flag_evasion", [](const ledger::Chain& c, const std::string& period) {
    return views::to_json(views::flag_evasion(c, period)).dump();
  });
  m.def("period_of", &views::period_of);

  m.def("run_simulation", [](const std::string& scenario) {
    const auto result = replication::run_simulation(replication::scenario_from_json(json::parse(scenario)));
    return std::make_pair(result.summary().dump(), result.trace_jsonl());
  });
  m.def("verify_data_dir", [](const std::string& dir) { return service::inspect(dir).to_json().dump(); });
}
