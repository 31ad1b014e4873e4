#include <gtest/gtest.h>

#include "chainvoice/contract.hpp"
#include "fixtures.hpp"

namespace chainvoice::contract {
namespace {

using namespace chainvoice::testing;

class ContractTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_TRUE(state.apply(reg("s1", Role::shopkeeper, 0), 1));
    ASSERT_TRUE(state.apply(reg("c1", Role::customer, 5000), 1));
  }

  ErrorCode fail(const Transaction& tx) {
    auto before = state.snapshot().dump();
    auto r = state.apply(tx, 2);
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(state.snapshot().dump(), before) << "failed apply must not change state";
    return r.ok() ? ErrorCode::UnknownAccount : r.error().code;
  }

  ContractState state;
};

TEST_F(ContractTest, RegisterAccountEmitsEvent) {
  ContractState s;
  auto r = s.apply(reg("c1", Role::customer, 5000), 0);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->size(), 1u);
  EXPECT_EQ(std::get<AccountRegistered>(r->front()), (AccountRegistered{"c1", Role::customer}));
  EXPECT_EQ(s.find_account("c1")->balance, 5000u);
}

TEST_F(ContractTest, DuplicateAccount) { EXPECT_EQ(fail(reg("c1", Role::customer, 1)), ErrorCode::DuplicateAccount); }

TEST_F(ContractTest, AccountIdCharset) {
  EXPECT_EQ(fail(reg("", Role::customer)), ErrorCode::InvalidAccountId);
  EXPECT_EQ(fail(reg("Upper", Role::customer)), ErrorCode::InvalidAccountId);
  EXPECT_EQ(fail(reg(std::string(65, 'a'), Role::customer)), ErrorCode::InvalidAccountId);
  EXPECT_TRUE(state.apply(reg(std::string(64, 'a'), Role::customer), 2));
  EXPECT_TRUE(state.apply(reg("ok_id-9", Role::customer), 2));
}

TEST_F(ContractTest, SupplyCappedBelowTwoToFiftyThree) {
  EXPECT_EQ(fail(reg("rich", Role::customer, kMaxAmount)), ErrorCode::InvalidAmount);
  EXPECT_TRUE(state.apply(reg("rich", Role::customer, kMaxAmount - 5000), 2));
}

TEST_F(ContractTest, FirstBillIdIsOneThenTwo) {
  auto first = state.create_bill("s1", 1000, 180, "rice 5kg", 2);
  ASSERT_TRUE(first);
  EXPECT_EQ(first->bill_id, 1u);
  EXPECT_EQ(state.query_bill(1)->status, BillStatus::unpaid);
  EXPECT_EQ(first->event, (BillCreated{1, "s1", 1000, "rice 5kg"}));
  auto second = state.create_bill("s1", 50, 0, "salt", 2);
  ASSERT_TRUE(second);
  EXPECT_EQ(second->bill_id, 2u);
  EXPECT_EQ(state.bill_counter(), 2u);
}

TEST_F(ContractTest, CreateBillErrors) {
  EXPECT_EQ(fail(bill("s1", 0, 0, "x")), ErrorCode::InvalidAmount);
  EXPECT_EQ(fail(bill("s1", 100, 101, "x")), ErrorCode::InvalidAmount);
  EXPECT_EQ(fail(bill("s1", kMaxAmount + 1, 0, "x")), ErrorCode::InvalidAmount);
  EXPECT_EQ(fail(bill("nobody", 100, 1, "x")), ErrorCode::UnknownAccount);
  EXPECT_EQ(fail(bill("s1", 100, 1, std::string(257, 'm'))), ErrorCode::MemoTooLong);
  EXPECT_EQ(fail(bill("s1", 100, 1, "\xff\xfe")), ErrorCode::InvalidText);
  EXPECT_TRUE(state.apply(bill("s1", 100, 100, std::string(256, 'm')), 2));
  EXPECT_TRUE(state.apply(bill("s1", 100, 0, "chai \xe2\x98\x95"), 2));
}

TEST_F(ContractTest, PayBillTransfersAndMarksPaid) {
  ASSERT_TRUE(state.create_bill("s1", 1000, 180, "rice 5kg", 2));
  auto paid = state.pay_bill(1, "c1", 1000, 3);
  ASSERT_TRUE(paid);
  EXPECT_EQ(paid.value(), (BillPaid{1, "c1", 1000}));
  EXPECT_EQ(state.find_account("c1")->balance, 4000u);
  EXPECT_EQ(state.find_account("s1")->balance, 1000u);
  auto b = state.query_bill(1).value();
  EXPECT_EQ(b.status, BillStatus::paid);
  EXPECT_EQ(b.payer, std::optional<AccountId>("c1"));
  EXPECT_EQ(b.paid_at_height, std::optional<std::uint64_t>(3));
  EXPECT_EQ(b.created_at_height, 2u);
}

TEST_F(ContractTest, PayBillErrorsInOrder) {
  ASSERT_TRUE(state.create_bill("s1", 1000, 180, "rice", 2));
  ASSERT_TRUE(state.create_bill("s1", 9000, 0, "tv", 2));
  EXPECT_EQ(fail(pay(1, "c1", 999)), ErrorCode::AmountMismatch);
  EXPECT_EQ(fail(pay(1, "c1", 1001)), ErrorCode::AmountMismatch);  // overpayment is rejected too
  EXPECT_EQ(fail(pay(7, "c1", 1000)), ErrorCode::UnknownBill);
  EXPECT_EQ(fail(pay(0, "c1", 1000)), ErrorCode::UnknownBill);
  EXPECT_EQ(fail(pay(1, "ghost", 1000)), ErrorCode::UnknownAccount);
  EXPECT_EQ(fail(pay(2, "c1", 9000)), ErrorCode::InsufficientFunds);
  // Amount is checked before funds.
  EXPECT_EQ(fail(pay(2, "c1", 1)), ErrorCode::AmountMismatch);
  ASSERT_TRUE(state.pay_bill(1, "c1", 1000, 3));
  // Paid is checked before amount.
  EXPECT_EQ(fail(pay(1, "c1", 5)), ErrorCode::AlreadyPaid);
  EXPECT_EQ(fail(pay(1, "c1", 1000)), ErrorCode::AlreadyPaid);
}

TEST_F(ContractTest, QueryBillUnknown) {
  EXPECT_EQ(state.query_bill(0).error().code, ErrorCode::UnknownBill);
  EXPECT_EQ(state.query_bill(1).error().code, ErrorCode::UnknownBill);
}

TEST_F(ContractTest, RemittanceAndDocuments) {
  EXPECT_TRUE(state.apply(remit("s1", 180, "2024-03"), 2));
  EXPECT_EQ(fail(remit("c1", 180, "2024-03")), ErrorCode::NotAShopkeeper);
  EXPECT_EQ(fail(remit("zz", 180, "2024-03")), ErrorCode::UnknownAccount);
  EXPECT_EQ(fail(remit("s1", 0, "2024-03")), ErrorCode::InvalidAmount);
  EXPECT_EQ(fail(remit("s1", 10, "2024-13")), ErrorCode::InvalidPeriod);
  EXPECT_EQ(fail(remit("s1", 10, "24-03")), ErrorCode::InvalidPeriod);
  EXPECT_TRUE(state.apply(doc(DocumentKind::show_cause_notice, "s1", "explain march"), 2));
  EXPECT_EQ(fail(doc(DocumentKind::order, "zz", "x")), ErrorCode::UnknownAccount);
  EXPECT_EQ(fail(doc(DocumentKind::order, "s1", std::string(4097, 'x'))), ErrorCode::PayloadTooLong);
}

TEST_F(ContractTest, PureApplyLeavesInputUntouched) {
  const ContractState before = state;
  auto t = apply(state, bill("s1", 10, 1, "x"), 2);
  ASSERT_TRUE(t);
  EXPECT_EQ(state, before);
  EXPECT_EQ(t->state.bill_counter(), 1u);
  EXPECT_EQ(t->events.size(), 1u);
  EXPECT_FALSE(apply(state, pay(1, "c1", 10), 2).ok());
}

TEST_F(ContractTest, EventLogFollowsApplicationOrder) {
  ASSERT_TRUE(state.apply(bill("s1", 10, 1, "x"), 2));
  ASSERT_TRUE(state.apply(pay(1, "c1", 10), 3));
  ASSERT_EQ(state.event_log().size(), 4u);
  EXPECT_TRUE(std::holds_alternative<BillCreated>(state.event_log()[2]));
  EXPECT_TRUE(std::holds_alternative<BillPaid>(state.event_log()[3]));
}

TEST(ContractSnapshot, CanonicalDigestIsSortedAndCompact) {
  ContractState s;
  ASSERT_TRUE(s.apply(reg("s1", Role::shopkeeper), 1));
  ASSERT_TRUE(s.apply(bill("s1", 1000, 180, "rice"), 1));
  const std::string expected =
      R"({"accounts":{"s1":{"account_id":"s1","balance":0,"role":"shopkeeper"}},"bill_counter":1,)"
      R"("bills":{"1":{"amount":1000,"bill_id":1,"created_at_height":1,"memo":"rice","paid_at_height":null,)"
      R"("payee":"s1","payer":null,"status":"unpaid","tax_amount":180}}})";
  EXPECT_EQ(s.snapshot().dump(), expected);
  EXPECT_EQ(s.digest(), sha256(expected));
}

TEST(ContractProperties, ConservationFailedNoOpsMonotoneIdsAndReplay) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    WorkloadGenerator gen(seed);
    ContractState live;
    live.set_event_log_enabled(false);
    std::vector<Transaction> applied;
    std::uint64_t creations = 0;
    std::map<BillId, Bill> paid;
    for (int i = 0; i < 3000; ++i) {
      Transaction tx = gen.next(live);
      const Amount sum_before = live.total_balance();
      const ContractState before = live;
      const std::string before_json = i % 10 == 0 ? live.snapshot().dump() : std::string();
      auto r = live.apply(tx, applied.size() / 50 + 1);
      if (!r) {
        ASSERT_TRUE(live == before);
        if (i % 10 == 0) ASSERT_EQ(live.snapshot().dump(), before_json);
        continue;
      }
      Amount recount = 0;
      for (const auto& [_, a] : live.accounts()) recount += a.balance;
      ASSERT_EQ(recount, live.total_balance());
      if (const auto* rg = std::get_if<RegisterAccount>(&tx)) {
        ASSERT_EQ(live.total_balance(), sum_before + rg->initial_balance);
      } else {
        ASSERT_EQ(live.total_balance(), sum_before);
      }
      if (std::holds_alternative<CreateBill>(tx)) {
        ++creations;
        ASSERT_EQ(std::get<BillCreated>(r->front()).bill_id, creations);
      }
      if (const auto* p = std::get_if<PayBill>(&tx)) paid[p->bill_id] = *live.find_bill(p->bill_id);
      for (const auto& [id, b] : paid) ASSERT_EQ(*live.find_bill(id), b);
      applied.push_back(tx);
    }
    // Replay through blocks of 50.
    auto chain = ledger::genesis("t", 0);
    for (std::size_t i = 0; i < applied.size(); i += 50) {
      std::vector<Transaction> batch(applied.begin() + i,
                                     applied.begin() + std::min(applied.size(), i + 50));
      chain = ledger::append_block(chain, std::move(batch), "n", i);
    }
    EXPECT_EQ(replay(chain).digest(), live.digest());
  }
}

}  // namespace
}  // namespace chainvoice::contract
