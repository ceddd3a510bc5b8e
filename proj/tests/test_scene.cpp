#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "coopsense/scene.hpp"

using namespace coopsense;

namespace {

scene::Scenario single_box_scene() {
    scene::Scenario s;
    s.lidar = scene::default_lidar();
    s.rsu_position = {10.0, 10.0, 6.0};
    s.roi = {{10.0, 0.0, 2.0}, {30.0, 20.0, 4.0}};
    s.cavs.push_back({0, {0.0, 0.0, 1.0}, {{0.0, 0.0, 0.5}, {1.0, 1.0, 1.0}}});
    s.objects.push_back({0, scene::ObjectClass::car, {{10.0, 0.0, 1.0}, {2.0, 2.0, 2.0}}});
    return s;
}

double surface_gap(const scene::Point3& p, const scene::BoundingBox& box) {
    double outside = 0.0;
    double inside = 1e30;
    const double c[3] = {p.x, p.y, p.z};
    for (int axis = 0; axis < 3; ++axis) {
        const double lo = box.min(axis), hi = box.max(axis);
        if (c[axis] < lo)
            outside = std::max(outside, lo - c[axis]);
        else if (c[axis] > hi)
            outside = std::max(outside, c[axis] - hi);
        else
            inside = std::min(inside, std::min(c[axis] - lo, hi - c[axis]));
    }
    return outside > 0.0 ? outside : inside;
}

}  // namespace

TEST_CASE("surface area of boxes") {
    CHECK(scene::surface_area({{0, 0, 0}, {1, 1, 1}}) == doctest::Approx(6.0));
    CHECK(scene::surface_area({{5, 5, 5}, {8.0, 2.5, 3.0}}) == doctest::Approx(103.0));
    CHECK_THROWS_AS(scene::surface_area({{0, 0, 0}, {2, 2, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(scene::surface_area({{0, 0, 0}, {-1, 2, 2}}), std::invalid_argument);
}

TEST_CASE("box containment uses closed intervals") {
    const scene::BoundingBox box{{10, 0, 1}, {2, 2, 2}};
    CHECK(box.contains({10, 0, 1}));
    CHECK(box.contains({11, 1, 2}));          // max corner
    CHECK(box.contains({9, 0, 1}));           // min face
    CHECK_FALSE(box.contains({11.001, 0, 1}));  // 1 mm outside
    CHECK_FALSE(box.contains({10, -1.001, 1}));
}

TEST_CASE("extraction keeps exactly the contained points") {
    const scene::BoundingBox box{{0, 0, 0}, {2, 2, 2}};
    const scene::PointCloud cloud = {
        {0, 0, 0}, {1, 1, 1}, {1.0005, 0, 0}, {-1, -1, -1}, {0, 0, 1.2}};
    const auto inside = scene::extract_object_points(cloud, box);
    REQUIRE(inside.size() == 3);
    CHECK(inside[0].x == 0);
    CHECK(inside[1].x == 1);
    CHECK(inside[2].x == -1);
}

TEST_CASE("rays land on the face nearest the sensor") {
    const auto s = single_box_scene();
    const auto cloud = scene::simulate_lidar(s, s.cavs[0], s.lidar);
    const auto on_box = scene::extract_object_points(cloud, s.objects[0].box);
    REQUIRE(on_box.size() > 100);
    for (const auto& p : on_box) CHECK(p.x == 9.0);  // snapped exactly onto the near face
}

TEST_CASE("every simulated point lies on a surface") {
    auto s = single_box_scene();
    s.cavs.push_back({1, {20.0, 3.0, 1.9}, {{20.0, 3.0, 0.8}, {4.6, 1.8, 1.6}}});
    s.objects.push_back({1, scene::ObjectClass::pedestrian, {{14.0, -2.0, 0.9}, {0.5, 0.5, 1.8}}});
    for (const auto& cav : s.cavs) {
        const auto cloud = scene::simulate_lidar(s, cav, s.lidar);
        REQUIRE(!cloud.empty());
        for (const auto& p : cloud) {
            double gap = std::abs(p.z - s.ground_z);
            for (const auto& obj : s.objects) gap = std::min(gap, surface_gap(p, obj.box));
            for (const auto& other : s.cavs)
                if (other.id != cav.id) gap = std::min(gap, surface_gap(p, other.body));
            CHECK(gap < 1e-9);
        }
        for (const auto& p : cloud)
            CHECK(scene::distance(p, cav.sensor_origin) <= s.lidar.max_range + 1e-9);
    }
}

TEST_CASE("an object fully behind another is never hit") {
    scene::Scenario s;
    s.lidar = scene::default_lidar();
    s.rsu_position = {10, 10, 6};
    s.roi = {{8, 0, 2}, {30, 20, 4}};
    s.cavs.push_back({0, {0.0, 0.0, 1.0}, {{0.0, 0.0, 0.5}, {1.0, 1.0, 1.0}}});
    s.objects.push_back({0, scene::ObjectClass::truck, {{6.0, 0.0, 1.5}, {8.0, 2.5, 3.0}}});
    s.objects.push_back({1, scene::ObjectClass::cyclist, {{12.0, 0.0, 0.85}, {1.8, 0.6, 1.7}}});
    const auto cloud = scene::simulate_lidar(s, s.cavs[0], s.lidar);
    CHECK(!scene::extract_object_points(cloud, s.objects[0].box).empty());
    CHECK(scene::extract_object_points(cloud, s.objects[1].box).empty());
}

TEST_CASE("two viewpoints see opposite faces of a truck") {
    scene::Scenario s;
    s.lidar = scene::default_lidar();
    s.rsu_position = {10, 10, 6};
    s.roi = {{10, 0, 2}, {40, 20, 4}};
    s.cavs.push_back({0, {0.0, 0.0, 1.9}, {{0.0, 0.0, 0.8}, {4.6, 1.8, 1.6}}});
    s.cavs.push_back({1, {20.0, 0.0, 1.9}, {{20.0, 0.0, 0.8}, {4.6, 1.8, 1.6}}});
    s.objects.push_back({0, scene::ObjectClass::truck, {{10.0, 0.0, 1.5}, {8.0, 2.5, 3.0}}});
    const auto& box = s.objects[0].box;

    auto face_counts = [&](int cav_idx) {
        const auto cloud = scene::simulate_lidar(s, s.cavs[cav_idx], s.lidar);
        const auto pts = scene::extract_object_points(cloud, box);
        int near = 0, far = 0;
        for (const auto& p : pts) {
            if (p.x == box.min(0)) ++near;
            if (p.x == box.max(0)) ++far;
        }
        return std::pair{near, far};
    };
    const auto [near0, far0] = face_counts(0);
    const auto [near1, far1] = face_counts(1);
    CHECK(near0 > 0);
    CHECK(far0 == 0);  // the back face is invisible from the front
    CHECK(far1 > 0);
    CHECK(near1 == 0);
}

TEST_CASE("lidar output is deterministic") {
    const auto s = single_box_scene();
    const auto a = scene::simulate_lidar(s, s.cavs[0], s.lidar);
    const auto b = scene::simulate_lidar(s, s.cavs[0], s.lidar);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
        CHECK(a[i].z == b[i].z);
    }
}

TEST_CASE("partition assigns shared-face points to the lower index") {
    std::vector<scene::ObjectSpec> objects;
    objects.push_back({0, scene::ObjectClass::car, {{9.0, 0.0, 1.0}, {2, 2, 2}}});
    objects.push_back({1, scene::ObjectClass::car, {{11.0, 0.0, 1.0}, {2, 2, 2}}});
    const scene::PointCloud cloud = {{10.0, 0.0, 1.0}, {8.5, 0.0, 1.0}, {11.5, 0.0, 1.0}};
    const auto parts = scene::partition_object_points(cloud, objects);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].size() == 2);  // the shared-face point goes to object 0
    CHECK(parts[1].size() == 1);

    std::size_t total = 0;
    for (const auto& part : parts) total += part.size();
    CHECK(total == cloud.size());
}

TEST_CASE("partitions are disjoint for disjoint boxes") {
    const auto s = single_box_scene();
    auto with_second = s;
    with_second.objects.push_back(
        {1, scene::ObjectClass::pedestrian, {{8.0, 4.0, 0.9}, {0.5, 0.5, 1.8}}});
    const auto cloud = scene::simulate_lidar(with_second, with_second.cavs[0], with_second.lidar);
    const auto parts = scene::partition_object_points(cloud, with_second.objects);
    REQUIRE(parts.size() == 2);
    for (std::size_t m = 0; m < parts.size(); ++m)
        for (const auto& p : parts[m]) CHECK(with_second.objects[m].box.contains(p));
}

TEST_CASE("scenario json round trip") {
    const auto s = single_box_scene();
    const auto text = scene::scenario_to_json(s);
    const auto back = scene::scenario_from_json(text);
    REQUIRE(back.cavs.size() == s.cavs.size());
    REQUIRE(back.objects.size() == s.objects.size());
    CHECK(back.cavs[0].sensor_origin.z == s.cavs[0].sensor_origin.z);
    CHECK(back.objects[0].box.center.x == s.objects[0].box.center.x);
    CHECK(back.objects[0].cls == s.objects[0].cls);
    CHECK(back.rsu_position.y == s.rsu_position.y);
    CHECK(back.lidar.azimuth_steps == s.lidar.azimuth_steps);
    CHECK(back.lidar.elevation_angles == s.lidar.elevation_angles);
}

TEST_CASE("scenario parsing errors name the problem") {
    CHECK_THROWS_WITH_AS(scene::scenario_from_json("{}"),
                         doctest::Contains("cavs"), std::runtime_error);
    CHECK_THROWS_AS(scene::scenario_from_json("not json"), std::runtime_error);
    CHECK_THROWS_WITH_AS(scene::load_scenario("/nonexistent/scene.json"),
                         doctest::Contains("/nonexistent/scene.json"), std::runtime_error);
    CHECK_THROWS_AS(scene::object_class_from_string("boat"), std::invalid_argument);
}

TEST_CASE("random scenarios are valid and reproducible") {
    std::mt19937_64 rng(42);
    const auto s = scene::random_scenario(rng);
    CHECK(s.cavs.size() >= 2);
    CHECK(s.cavs.size() <= 4);
    CHECK(s.objects.size() >= 3);
    CHECK(s.objects.size() <= 7);
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        CHECK(s.objects[i].box.intersects(s.roi));
        for (std::size_t j = i + 1; j < s.objects.size(); ++j)
            CHECK_FALSE(s.objects[i].box.intersects(s.objects[j].box));
        for (const auto& cav : s.cavs) CHECK_FALSE(s.objects[i].box.intersects(cav.body));
    }
    for (const auto& cav : s.cavs)
        CHECK(cav.sensor_origin.z > cav.body.max(2));

    std::mt19937_64 rng2(42);
    const auto t = scene::random_scenario(rng2);
    REQUIRE(t.objects.size() == s.objects.size());
    for (std::size_t i = 0; i < s.objects.size(); ++i)
        CHECK(t.objects[i].box.center.x == s.objects[i].box.center.x);
}
