#include "anyref/promptgen.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "anyref/evalkit.hpp"
#include "anyref/rng.hpp"
#include "anyref/synthgen.hpp"

namespace anyref {
namespace {

AnnotatedImage two_object_image() {
    AnnotatedImage img;
    img.image_id = "img";
    img.dims = {1000, 1000};
    AnnotatedObject cat;
    cat.category = "cat";
    cat.box = {100, 50, 300, 250};
    AnnotatedObject dog;
    dog.category = "dog";
    dog.box = {400, 500, 700, 800};
    img.objects = {cat, dog};
    return img;
}

TEST(DenseReferring, TwoObjectTemplate) {
    auto qa = gen_dense_referring(two_object_image());
    EXPECT_EQ(qa.kind, QAKind::DENSE_REFER);
    EXPECT_EQ(qa.question,
              "Please classify the objects in the following locations. "
              "1: [100, 50, 300, 250], 2: [400, 500, 700, 800]");
    EXPECT_EQ(qa.answer, "Here are the categories: 1: cat, 2: dog");
}

TEST(DenseReferring, SingletonHasOneEntry) {
    auto img = two_object_image();
    img.objects.resize(1);
    auto qa = gen_dense_referring(img);
    EXPECT_EQ(qa.question,
              "Please classify the objects in the following locations. "
              "1: [100, 50, 300, 250]");
    EXPECT_EQ(qa.answer, "Here are the categories: 1: cat");
    EXPECT_EQ(qa.question.find("2:"), std::string::npos);
}

TEST(DenseReferring, ShuffleInvariant) {
    auto img = two_object_image();
    AnnotatedObject bird;
    bird.category = "bird";
    bird.box = {50, 50, 120, 90};
    img.objects.push_back(bird);
    auto base = gen_dense_referring(img);

    auto shuffled = img;
    std::reverse(shuffled.objects.begin(), shuffled.objects.end());
    auto qa = gen_dense_referring(shuffled);
    EXPECT_EQ(qa.question, base.question);
    EXPECT_EQ(qa.answer, base.answer);
}

TEST(DenseReferring, EmptyImageThrows) {
    AnnotatedImage img;
    img.image_id = "e";
    img.dims = {100, 100};
    EXPECT_THROW(gen_dense_referring(img), EmptyAnnotationError);
    EXPECT_THROW(gen_dense_detection(img), EmptyAnnotationError);
}

TEST(DenseDetection, TwoObjectTemplate) {
    auto qa = gen_dense_detection(two_object_image());
    EXPECT_EQ(qa.kind, QAKind::DENSE_DETECT);
    EXPECT_EQ(qa.question,
              "Please localize visible objects in the image in a raster scan "
              "order.");
    EXPECT_EQ(qa.answer,
              "The objects are: 1: cat [100, 50, 300, 250], "
              "2: dog [400, 500, 700, 800]");
}

TEST(DenseDetection, RasterOrderMatchesGeometry) {
    auto img = two_object_image();
    AnnotatedObject high;
    high.category = "bird";
    high.box = {900, 10, 990, 60};  // top-most, should come first
    img.objects.push_back(high);
    auto qa = gen_dense_detection(img);
    EXPECT_EQ(qa.answer.find("1: bird"), std::string("The objects are: ").size());

    std::vector<PixelBox> boxes;
    for (const auto& o : img.objects) boxes.push_back(o.box);
    const auto order = raster_scan_order(boxes);
    auto parsed = parse_dense_detection(qa.answer);
    ASSERT_EQ(parsed.size(), order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        EXPECT_EQ(parsed[i].first, img.objects[order[i]].category);
}

TEST(DenseRoundTrip, SyntheticCorpusZeroLoss) {
    SynthConfig cfg;
    cfg.width = 512;
    cfg.height = 384;
    for (int i = 0; i < 25; ++i) {
        auto [img, raster] = synth_image(i, 1234, cfg);
        std::vector<PixelBox> boxes;
        for (const auto& o : img.objects) boxes.push_back(o.box);
        const auto order = raster_scan_order(boxes);

        auto refer = gen_dense_referring(img);
        auto parsed = parse_dense_referring(refer.question, refer.answer);
        ASSERT_EQ(parsed.size(), img.objects.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& src = img.objects[order[k]];
            EXPECT_EQ(parsed[k].first, src.category);
            EXPECT_TRUE(NormShape{parsed[k].second} ==
                        normalize_shape(src.box, img.dims));
        }

        auto detect = gen_dense_detection(img);
        auto dparsed = parse_dense_detection(detect.answer);
        ASSERT_EQ(dparsed.size(), img.objects.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& src = img.objects[order[k]];
            EXPECT_EQ(dparsed[k].first, src.category);
            EXPECT_TRUE(NormShape{dparsed[k].second} ==
                        normalize_shape(src.box, img.dims));
        }
    }
}

TEST(GroundedAnswer, PaperStyleSingleSlot) {
    // box chosen to normalize to [100, 150, 300, 200] on 1000x1000
    const PixelBox box{100.2, 150.0, 300.9, 200.4};
    auto out = gen_grounded_answer({{"dog", box}}, {1000, 1000},
                                   "There is a {dog} in the figure.");
    EXPECT_EQ(out, "There is a dog [100, 150, 300, 200] in the figure.");
}

TEST(GroundedAnswer, ZeroSpansUnchanged) {
    auto out = gen_grounded_answer({}, {100, 100}, "Nothing to ground here.");
    EXPECT_EQ(out, "Nothing to ground here.");
    // untouched slots survive verbatim
    auto keep = gen_grounded_answer({}, {100, 100}, "A {cat} sits.");
    EXPECT_EQ(keep, "A {cat} sits.");
}

TEST(GroundedAnswer, TwoSpansParseBack) {
    const Dims dims{1000, 1000};
    const PixelBox b1{10, 20, 110, 220};
    const PixelBox b2{500, 600, 700, 800};
    auto out = gen_grounded_answer({{"cat", b1}, {"sofa", b2}}, dims,
                                   "A {cat} sleeps on the {sofa}.");
    auto parsed = parse_grounded_text(out);
    EXPECT_EQ(parsed.malformed, 0);
    ASSERT_EQ(parsed.mentions.size(), 2u);
    EXPECT_EQ(parsed.mentions[0].span, "cat");
    EXPECT_TRUE(parsed.mentions[0].shape == normalize_shape(b1, dims));
    EXPECT_EQ(parsed.mentions[1].span, "sofa");
    EXPECT_TRUE(parsed.mentions[1].shape == normalize_shape(b2, dims));
}

TEST(GroundedAnswer, SlotErrors) {
    const Dims dims{100, 100};
    const PixelBox box{0, 0, 50, 50};
    EXPECT_THROW(gen_grounded_answer({{"dog", box}}, dims, "No slot here."),
                 TemplateError);
    EXPECT_THROW(
        gen_grounded_answer({{"dog", box}}, dims, "A {dog} and a {dog}."),
        TemplateError);
}

TEST(UnifyPrompt, AppendsOnce) {
    EXPECT_EQ(unify_prompt("Describe the image."),
              "Describe the image. Include the coordinates for each mentioned "
              "object.");
    const std::string done =
        "Describe the image. Include the coordinates for each mentioned "
        "object.";
    EXPECT_EQ(unify_prompt(done), done);
    EXPECT_EQ(unify_prompt(""),
              "Include the coordinates for each mentioned object.");
}

TEST(NumberedLists, OneBasedContiguousAndEqualLength) {
    SynthConfig cfg;
    cfg.width = 256;
    cfg.height = 256;
    auto [img, raster] = synth_image(2, 77, cfg);
    auto qa = gen_dense_referring(img);
    for (std::size_t k = 1; k <= img.objects.size(); ++k) {
        const std::string marker = std::to_string(k) + ": ";
        EXPECT_NE(qa.question.find(marker), std::string::npos) << k;
        EXPECT_NE(qa.answer.find(marker), std::string::npos) << k;
    }
    const std::string overflow = std::to_string(img.objects.size() + 1) + ": ";
    EXPECT_EQ(qa.question.find(overflow), std::string::npos);
    EXPECT_EQ(qa.answer.find(overflow), std::string::npos);
}

}  // namespace
}  // namespace anyref
