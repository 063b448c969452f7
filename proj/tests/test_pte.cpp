#include <gtest/gtest.h>

#include <filesystem>

#include "dqa/error.hpp"
#include "dqa/pte.hpp"
#include "dqa/text.hpp"
#include "test_util.hpp"

namespace dqa {
namespace {

const TemplateStore& store() {
  static const TemplateStore s = TemplateStore::builtin();
  return s;
}

TEST(Render, GeneralSubstitutesQuestion) {
  auto out = store().render(TemplateId::general, {{"Q", "What is an index?"}});
  EXPECT_NE(out.find("Question:What is an index?"), std::string::npos);
  EXPECT_EQ(out.find("{{"), std::string::npos);
}

TEST(Render, MissingBindingNamesSlot) {
  try {
    store().render(TemplateId::product, {{"Q", "q"}});
    FAIL() << "expected RenderError";
  } catch (const RenderError& e) {
    EXPECT_NE(std::string(e.what()).find("{{K}}"), std::string::npos) << e.what();
  }
}

TEST(Render, ExtraBindingIsAnError) {
  EXPECT_THROW(store().render(TemplateId::general, {{"Q", "q"}, {"K", "k"}}), RenderError);
}

TEST(Render, InstanceCarriesFormatBlock) {
  auto out = store().render(TemplateId::instance, {{"Q", "Why slow?"}, {"T", "- Schema: x"}, {"Agent_Scratchpad", ""}});
  EXPECT_NE(out.find("Use the following format:\n\nQuestion: ...;\nThought: ...;\nAction: ...;\nAction_Input: ...;\n"
                     "Observation: ...;\n...;\nFinal_Answer: ..."),
            std::string::npos);
  EXPECT_NE(out.find("Question: Why slow?"), std::string::npos);
}

TEST(Render, ProductUsesKnowledgeKeyword) {
  auto out = store().render(TemplateId::product, {{"Q", "q"}, {"K", "chunk text"}});
  EXPECT_NE(out.find("Question: q ; Knowledge:chunk text"), std::string::npos);
}

TEST(Render, BoundValuesAreNotRescanned) {
  auto out = store().render(TemplateId::product, {{"Q", "what is {{K}}?"}, {"K", "{{Q}}"}});
  EXPECT_NE(out.find("Question: what is {{K}}? ; Knowledge:{{Q}}"), std::string::npos);
}

TEST(Render, SlotNamesInOrder) {
  EXPECT_EQ(slot_names("{{B}} {{A}} {{B}} {{ not a slot }} {{1x}}"), (std::vector<std::string>{"B", "A"}));
}

TEST(Triggers, ByTemplate) {
  EXPECT_EQ(store().triggers(TemplateId::product), std::set<Trigger>{Trigger::rag});
  EXPECT_EQ(store().triggers(TemplateId::instance), std::set<Trigger>{Trigger::tig});
  EXPECT_TRUE(store().triggers(TemplateId::general).empty());
  EXPECT_TRUE(store().triggers(TemplateId::irrelevant).empty());
}

TEST(Routing, UnsafeSharesIrrelevantTemplate) {
  EXPECT_EQ(template_for(QuestionCategory::unsafe), TemplateId::irrelevant);
  EXPECT_EQ(template_for(QuestionCategory::instance), TemplateId::instance);
}

TEST(Routing, StoreRejectsBrokenRoutingTemplates) {
  TemplateStore s = TemplateStore::builtin();
  EXPECT_THROW(s.add({"product", "Question: {{Q}}", {Trigger::rag}}), RenderError);
  EXPECT_THROW(s.add({"product", "{{Q}} {{K}}", {Trigger::tig}}), RenderError);
  EXPECT_THROW(s.add({"general", "no slot", {}}), RenderError);
  EXPECT_NO_THROW(s.add({"general", "Q: {{Q}}", {}}));
  EXPECT_EQ(s.render(TemplateId::general, {{"Q", "x"}}), "Q: x");
}

TEST(Files, ParseHeader) {
  auto t = TemplateStore::parse_file("#template product triggers=rag\nQ={{Q}} K={{K}}\n");
  EXPECT_EQ(t.name, "product");
  EXPECT_EQ(t.body, "Q={{Q}} K={{K}}");
  EXPECT_EQ(t.triggers, std::set<Trigger>{Trigger::rag});
  EXPECT_THROW(TemplateStore::parse_file("no header\n"), ParseError);
}

TEST(Files, EnglishFilesMatchBuiltins) {
  auto loaded = TemplateStore::load_directory(testing::data_path("templates/en"));
  for (auto id : {TemplateId::general, TemplateId::product, TemplateId::instance, TemplateId::irrelevant}) {
    EXPECT_EQ(loaded.get(id).body, store().get(id).body) << to_string(id);
    EXPECT_EQ(loaded.get(id).triggers, store().get(id).triggers) << to_string(id);
  }
  EXPECT_EQ(loaded.version(), store().version());
}

TEST(Files, ChineseSetLoadsAndRenders) {
  auto zh = TemplateStore::load_directory(testing::data_path("templates/zh"));
  auto out = zh.render(TemplateId::product, {{"Q", "如何开启慢日志？"}, {"K", "设置参数"}});
  EXPECT_NE(out.find("如何开启慢日志？"), std::string::npos);
  EXPECT_NE(zh.version(), store().version());
}

TEST(Store, AuxiliaryPromptsPresent) {
  for (auto name : {prompts::kJudgePair, prompts::kJudgeToolFormat, prompts::kClassify, prompts::kClassifySafety,
                    prompts::kClassifyTopic, prompts::kMultipleChoice, prompts::kRewriteAnswer,
                    prompts::kProductKeyPoints, prompts::kProductQuestions, prompts::kProductAnswers,
                    prompts::kInstanceQuestions, prompts::kPolishCheck, prompts::kPolishSummarize}) {
    EXPECT_TRUE(store().contains(name)) << name;
  }
  EXPECT_THROW(store().get("nope"), LookupError);
}

TEST(Store, RewritePromptKeepsStylePhrase) {
  auto out = store().render(prompts::kRewriteAnswer, {{"Q", "q?"}, {"ANSWER", "a."}});
  EXPECT_NE(out.find("detailed, professional and friendly"), std::string::npos);
}

TEST(Store, VersionIsStable) {
  EXPECT_EQ(TemplateStore::builtin().version(), store().version());
  EXPECT_EQ(store().version().rfind("tmpl-", 0), 0u);
}

}  // namespace
}  // namespace dqa
