#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace coopsense::scene {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

Point3 operator+(const Point3& a, const Point3& b);
Point3 operator-(const Point3& a, const Point3& b);
Point3 operator*(const Point3& a, double s);
double distance(const Point3& a, const Point3& b);

/// Axis-aligned box given by its center and full edge lengths.
struct BoundingBox {
    Point3 center;
    Point3 lengths;

    double min(int axis) const;
    double max(int axis) const;
    /// Closed-interval membership: points exactly on a face count as inside.
    bool contains(const Point3& p) const;
    bool intersects(const BoundingBox& other) const;
};

/// Total face area of a box. Throws std::invalid_argument on non-positive edges.
double surface_area(const BoundingBox& box);

enum class ObjectClass { car, truck, pedestrian, cyclist };

std::string to_string(ObjectClass c);
ObjectClass object_class_from_string(const std::string& s);

struct ObjectSpec {
    int id = 0;
    ObjectClass cls = ObjectClass::car;
    BoundingBox box;
};

struct CavSpec {
    int id = 0;
    Point3 sensor_origin;  // must sit above the body box top face
    BoundingBox body;
};

struct LidarConfig {
    int azimuth_steps = 900;                 ///< uniform grid over [0, 2*pi)
    std::vector<double> elevation_angles;    ///< radians, fixed list
    double max_range = 80.0;                 ///< meters
};

LidarConfig default_lidar();

struct Scenario {
    std::vector<CavSpec> cavs;
    std::vector<ObjectSpec> objects;
    Point3 rsu_position;
    BoundingBox roi;
    double ground_z = 0.0;
    LidarConfig lidar;
};

using PointCloud = std::vector<Point3>;

/// Casts one ray per (azimuth, elevation) pair from the CAV's sensor origin and
/// returns the nearest hit on any object box, any other CAV body, or the ground
/// plane, when within max_range. The emitting CAV's own body is transparent to
/// its rays. Hit coordinates are snapped onto the struck face, so every returned
/// point lies exactly on a surface. Output order follows the ray grid, which
/// makes the result reproducible bit for bit.
PointCloud simulate_lidar(const Scenario& scenario, const CavSpec& cav,
                          const LidarConfig& lidar);

/// All points of the cloud inside the box (closed intervals on every axis).
PointCloud extract_object_points(const PointCloud& cloud, const BoundingBox& box);

/// Splits a cloud into per-object point sets. A point contained in several
/// (touching) boxes is assigned to the lowest-indexed object only.
std::vector<PointCloud> partition_object_points(const PointCloud& cloud,
                                                const std::vector<ObjectSpec>& objects);

/// Scenario (de)serialization. The JSON layout is documented in the README.
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& json_text);

struct RandomSceneOptions {
    int min_cavs = 2;
    int max_cavs = 4;
    int min_objects = 3;
    int max_objects = 7;
    double road_length = 50.0;
};

/// Draws a plausible two-lane road scene: CAVs on lane centers, objects of the
/// four supported classes with jittered dimensions, all boxes pairwise disjoint.
Scenario random_scenario(std::mt19937_64& rng, const RandomSceneOptions& opts = {});

}  // namespace coopsense::scene
