#pragma once

// Shared generators for tests. Everything is driven by SplitMix64 so failures replay.

#include <string>
#include <vector>

#include "chainvoice/contract.hpp"
#include "chainvoice/ledger.hpp"
#include "chainvoice/replication.hpp"
#include "chainvoice/transaction.hpp"

namespace chainvoice::testing {

using replication::SplitMix64;

inline RegisterAccount reg(std::string id, Role role, Amount balance = 0) {
  return RegisterAccount{std::move(id), role, balance};
}
inline CreateBill bill(std::string payee, Amount amount, Amount tax, std::string memo) {
  return CreateBill{std::move(payee), amount, tax, std::move(memo)};
}
inline PayBill pay(std::uint64_t id, std::string payer, Amount value) { return PayBill{id, std::move(payer), value}; }
inline TaxRemittance remit(std::string seller, Amount amount, std::string period) {
  return TaxRemittance{std::move(seller), amount, std::move(period)};
}
inline TaxDocument doc(DocumentKind kind, std::string subject, std::string payload) {
  return TaxDocument{kind, std::move(subject), std::move(payload)};
}

// Mixed workload over a small population. Some transactions are invalid on purpose
// (wrong amounts, unknown ids, double pays); many more fail on funds or role checks.
// Around a third are rejected overall.
class WorkloadGenerator {
 public:
  explicit WorkloadGenerator(std::uint64_t seed) : rng_(seed) {}

  Transaction next(const contract::ContractState& state) {
    const auto roll = rng_.uniform(0, 99);
    if (state.accounts().size() < 4 || roll < 6) return registration();
    if (roll < 40) return create(state);
    if (roll < 80) return payment(state);
    if (roll < 92) return remittance(state);
    return document(state);
  }

  SplitMix64& rng() { return rng_; }

 private:
  Transaction registration() {
    static constexpr Role kRoles[] = {Role::shopkeeper, Role::customer, Role::customer,
                                      Role::state_tax_authority, Role::central_tax_authority,
                                      Role::other_authority};
    const Role role = kRoles[rng_.uniform(0, 5)];
    // Occasionally collide with an existing id.
    const auto n = rng_.uniform(0, 9) == 0 && registered_ > 0 ? rng_.uniform(0, registered_ - 1) : registered_++;
    return RegisterAccount{"acct-" + std::to_string(n), role, rng_.uniform(0, 100000)};
  }

  const AccountId& pick(const contract::ContractState& state) {
    auto it = state.accounts().begin();
    std::advance(it, static_cast<long>(rng_.uniform(0, state.accounts().size() - 1)));
    return it->first;
  }

  Transaction create(const contract::ContractState& state) {
    Amount amount = rng_.uniform(0, 20) == 0 ? 0 : rng_.uniform(1, 5000);
    Amount tax = amount == 0 ? 0 : rng_.uniform(0, amount + (rng_.uniform(0, 20) == 0 ? 10 : 0));
    std::string payee = rng_.uniform(0, 30) == 0 ? std::string("ghost") : pick(state);
    return CreateBill{payee, amount, tax, "item-" + std::to_string(rng_.next() % 1000)};
  }

  Transaction payment(const contract::ContractState& state) {
    const std::uint64_t count = state.bill_counter();
    std::uint64_t id = count == 0 ? 1 : rng_.uniform(1, count + 1);
    Amount value = 1;
    if (const auto* b = state.find_bill(id)) value = rng_.uniform(0, 9) == 0 ? b->amount + 1 : b->amount;
    return PayBill{id, pick(state), value};
  }

  Transaction remittance(const contract::ContractState& state) {
    static constexpr const char* kPeriods[] = {"2024-01", "2024-02", "2024-13"};
    return TaxRemittance{pick(state), rng_.uniform(0, 2000), kPeriods[rng_.uniform(0, 2)]};
  }

  Transaction document(const contract::ContractState& state) {
    return TaxDocument{static_cast<DocumentKind>(rng_.uniform(0, 4)), pick(state),
                       "ref-" + std::to_string(rng_.next() % 100000)};
  }

  SplitMix64 rng_;
  std::uint64_t registered_ = 0;
};

// A chain holding only transactions that apply cleanly, packed into blocks whose
// timestamps advance by up to `max_step` seconds so periods roll over.
struct GeneratedChain {
  ledger::Chain chain;
  contract::ContractState state;
};

inline GeneratedChain generate_chain(std::uint64_t seed, std::size_t tx_count, std::size_t per_block = 8,
                                     ledger::UnixSeconds start = 1704067200, std::uint64_t max_step = 5 * 86400) {
  WorkloadGenerator gen(seed);
  GeneratedChain out{ledger::genesis("gen", start), {}};
  std::vector<Transaction> pending;
  ledger::UnixSeconds ts = start;
  auto seal = [&] {
    ts += gen.rng().uniform(0, max_step);
    out.chain = ledger::append_block(out.chain, std::move(pending), "gen", ts);
    pending.clear();
  };
  std::size_t accepted = 0;
  while (accepted < tx_count) {
    Transaction tx = gen.next(out.state);
    if (!out.state.apply(tx, out.chain.height() + 1)) continue;
    pending.push_back(std::move(tx));
    ++accepted;
    if (pending.size() >= per_block) seal();
  }
  if (!pending.empty()) seal();
  return out;
}

}  // namespace chainvoice::testing
