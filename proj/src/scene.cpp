#include "coopsense/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace coopsense::scene {

using nlohmann::json;

Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Point3 operator*(const Point3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }

double distance(const Point3& a, const Point3& b) {
    const Point3 d = a - b;
    return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

namespace {

double axis_of(const Point3& p, int axis) {
    switch (axis) {
        case 0: return p.x;
        case 1: return p.y;
        default: return p.z;
    }
}

void set_axis(Point3& p, int axis, double v) {
    switch (axis) {
        case 0: p.x = v; break;
        case 1: p.y = v; break;
        default: p.z = v; break;
    }
}

}  // namespace

double BoundingBox::min(int axis) const { return axis_of(center, axis) - axis_of(lengths, axis) / 2.0; }
double BoundingBox::max(int axis) const { return axis_of(center, axis) + axis_of(lengths, axis) / 2.0; }

bool BoundingBox::contains(const Point3& p) const {
    for (int axis = 0; axis < 3; ++axis) {
        const double v = axis_of(p, axis);
        if (v < min(axis) || v > max(axis)) return false;
    }
    return true;
}

bool BoundingBox::intersects(const BoundingBox& other) const {
    for (int axis = 0; axis < 3; ++axis) {
        if (max(axis) < other.min(axis) || other.max(axis) < min(axis)) return false;
    }
    return true;
}

double surface_area(const BoundingBox& box) {
    const double lx = box.lengths.x, ly = box.lengths.y, lz = box.lengths.z;
    if (lx <= 0.0 || ly <= 0.0 || lz <= 0.0)
        throw std::invalid_argument("surface_area: box edges must be positive");
    return 2.0 * (lx * ly + ly * lz + lx * lz);
}

std::string to_string(ObjectClass c) {
    switch (c) {
        case ObjectClass::car: return "car";
        case ObjectClass::truck: return "truck";
        case ObjectClass::pedestrian: return "pedestrian";
        case ObjectClass::cyclist: return "cyclist";
    }
    return "car";
}

ObjectClass object_class_from_string(const std::string& s) {
    if (s == "car") return ObjectClass::car;
    if (s == "truck") return ObjectClass::truck;
    if (s == "pedestrian") return ObjectClass::pedestrian;
    if (s == "cyclist") return ObjectClass::cyclist;
    throw std::invalid_argument("unknown object class: " + s);
}

LidarConfig default_lidar() {
    LidarConfig cfg;
    cfg.azimuth_steps = 900;
    cfg.max_range = 80.0;
    const double lo = -15.0 * M_PI / 180.0;
    const double hi = 4.0 * M_PI / 180.0;
    const int rows = 16;
    for (int i = 0; i < rows; ++i)
        cfg.elevation_angles.push_back(lo + (hi - lo) * i / (rows - 1));
    return cfg;
}

namespace {

struct Slab {
    double lo[3];
    double hi[3];
};

Slab to_slab(const BoundingBox& b) {
    Slab s;
    for (int axis = 0; axis < 3; ++axis) {
        s.lo[axis] = b.min(axis);
        s.hi[axis] = b.max(axis);
    }
    return s;
}

struct RayHit {
    double t = std::numeric_limits<double>::infinity();
    int axis = -1;       // axis of the struck face
    double face = 0.0;   // coordinate of that face
};

/// Entry distance of the ray into the box, or miss. Rays starting inside or
/// on the box do not count as hits.
bool ray_box_entry(const Point3& origin, const double dir[3], const Slab& box, RayHit& hit) {
    double t_lo = 0.0, t_hi = std::numeric_limits<double>::infinity();
    int enter_axis = -1;
    double enter_face = 0.0;
    const double o[3] = {origin.x, origin.y, origin.z};
    for (int axis = 0; axis < 3; ++axis) {
        if (std::abs(dir[axis]) < 1e-15) {
            if (o[axis] < box.lo[axis] || o[axis] > box.hi[axis]) return false;
            continue;
        }
        const double inv = 1.0 / dir[axis];
        double t1 = (box.lo[axis] - o[axis]) * inv;
        double t2 = (box.hi[axis] - o[axis]) * inv;
        double face = dir[axis] > 0.0 ? box.lo[axis] : box.hi[axis];
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > t_lo) {
            t_lo = t1;
            enter_axis = axis;
            enter_face = face;
        }
        t_hi = std::min(t_hi, t2);
        if (t_lo > t_hi) return false;
    }
    if (enter_axis < 0 || t_lo <= 1e-9) return false;
    hit.t = t_lo;
    hit.axis = enter_axis;
    hit.face = enter_face;
    return true;
}

}  // namespace

PointCloud simulate_lidar(const Scenario& scenario, const CavSpec& cav, const LidarConfig& lidar) {
    if (lidar.azimuth_steps <= 0) throw std::invalid_argument("simulate_lidar: azimuth_steps must be positive");
    if (lidar.max_range <= 0.0) throw std::invalid_argument("simulate_lidar: max_range must be positive");

    std::vector<Slab> obstacles;
    obstacles.reserve(scenario.objects.size() + scenario.cavs.size());
    for (const auto& obj : scenario.objects) obstacles.push_back(to_slab(obj.box));
    for (const auto& other : scenario.cavs) {
        if (other.id == cav.id) continue;  // own body is transparent
        obstacles.push_back(to_slab(other.body));
    }

    std::vector<double> cos_az(lidar.azimuth_steps), sin_az(lidar.azimuth_steps);
    for (int i = 0; i < lidar.azimuth_steps; ++i) {
        const double a = 2.0 * M_PI * i / lidar.azimuth_steps;
        cos_az[i] = std::cos(a);
        sin_az[i] = std::sin(a);
    }

    PointCloud cloud;
    const Point3& o = cav.sensor_origin;
    for (double elev : lidar.elevation_angles) {
        const double ce = std::cos(elev), se = std::sin(elev);
        for (int i = 0; i < lidar.azimuth_steps; ++i) {
            const double dir[3] = {ce * cos_az[i], ce * sin_az[i], se};
            RayHit best;
            for (const auto& slab : obstacles) {
                RayHit h;
                if (ray_box_entry(o, dir, slab, h) && h.t < best.t) best = h;
            }
            // ground plane
            if (dir[2] < -1e-15) {
                const double t = (scenario.ground_z - o.z) / dir[2];
                if (t > 1e-9 && t < best.t) {
                    best.t = t;
                    best.axis = 2;
                    best.face = scenario.ground_z;
                }
            }
            if (best.axis < 0 || best.t > lidar.max_range) continue;
            Point3 p{o.x + best.t * dir[0], o.y + best.t * dir[1], o.z + best.t * dir[2]};
            set_axis(p, best.axis, best.face);  // snap onto the struck face
            cloud.push_back(p);
        }
    }
    return cloud;
}

PointCloud extract_object_points(const PointCloud& cloud, const BoundingBox& box) {
    PointCloud out;
    for (const auto& p : cloud)
        if (box.contains(p)) out.push_back(p);
    return out;
}

std::vector<PointCloud> partition_object_points(const PointCloud& cloud,
                                                const std::vector<ObjectSpec>& objects) {
    std::vector<PointCloud> out(objects.size());
    for (const auto& p : cloud) {
        for (std::size_t m = 0; m < objects.size(); ++m) {
            if (objects[m].box.contains(p)) {
                out[m].push_back(p);
                break;  // shared-face points go to the lowest-indexed object
            }
        }
    }
    return out;
}

namespace {

json point_to_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

Point3 point_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3)
        throw std::runtime_error("scenario: " + what + " must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["cavs"] = json::array();
    for (const auto& c : s.cavs) {
        j["cavs"].push_back({{"id", c.id},
                             {"sensor_origin", point_to_json(c.sensor_origin)},
                             {"body_center", point_to_json(c.body.center)},
                             {"body_lengths", point_to_json(c.body.lengths)}});
    }
    j["objects"] = json::array();
    for (const auto& obj : s.objects) {
        j["objects"].push_back({{"id", obj.id},
                                {"class", to_string(obj.cls)},
                                {"center", point_to_json(obj.box.center)},
                                {"lengths", point_to_json(obj.box.lengths)}});
    }
    j["rsu_position"] = point_to_json(s.rsu_position);
    j["roi"] = {{"center", point_to_json(s.roi.center)}, {"lengths", point_to_json(s.roi.lengths)}};
    j["ground_z"] = s.ground_z;
    j["lidar"] = {{"azimuth_steps", s.lidar.azimuth_steps},
                  {"elevation_angles", s.lidar.elevation_angles},
                  {"max_range", s.lidar.max_range}};
    return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("scenario: invalid JSON: ") + e.what());
    }
    Scenario s;
    if (!j.contains("cavs") || !j["cavs"].is_array())
        throw std::runtime_error("scenario: missing or invalid field 'cavs'");
    for (const auto& jc : j["cavs"]) {
        CavSpec c;
        c.id = jc.at("id").get<int>();
        c.sensor_origin = point_from_json(jc.at("sensor_origin"), "cavs.sensor_origin");
        c.body.center = point_from_json(jc.at("body_center"), "cavs.body_center");
        c.body.lengths = point_from_json(jc.at("body_lengths"), "cavs.body_lengths");
        s.cavs.push_back(c);
    }
    if (!j.contains("objects") || !j["objects"].is_array())
        throw std::runtime_error("scenario: missing or invalid field 'objects'");
    for (const auto& jo : j["objects"]) {
        ObjectSpec obj;
        obj.id = jo.at("id").get<int>();
        obj.cls = object_class_from_string(jo.at("class").get<std::string>());
        obj.box.center = point_from_json(jo.at("center"), "objects.center");
        obj.box.lengths = point_from_json(jo.at("lengths"), "objects.lengths");
        s.objects.push_back(obj);
    }
    s.rsu_position = point_from_json(j.at("rsu_position"), "rsu_position");
    s.roi.center = point_from_json(j.at("roi").at("center"), "roi.center");
    s.roi.lengths = point_from_json(j.at("roi").at("lengths"), "roi.lengths");
    s.ground_z = j.value("ground_z", 0.0);
    if (j.contains("lidar")) {
        const auto& jl = j["lidar"];
        s.lidar.azimuth_steps = jl.value("azimuth_steps", 900);
        s.lidar.max_range = jl.value("max_range", 80.0);
        if (jl.contains("elevation_angles"))
            s.lidar.elevation_angles = jl["elevation_angles"].get<std::vector<double>>();
    }
    if (s.lidar.elevation_angles.empty()) s.lidar = default_lidar();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_from_json(buf.str());
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path);
    out << scenario_to_json(scenario) << "\n";
}

namespace {

Point3 class_dims(ObjectClass c) {
    switch (c) {
        case ObjectClass::car: return {4.5, 1.8, 1.5};
        case ObjectClass::truck: return {8.0, 2.5, 3.0};
        case ObjectClass::pedestrian: return {0.5, 0.5, 1.8};
        case ObjectClass::cyclist: return {1.8, 0.6, 1.7};
    }
    return {4.5, 1.8, 1.5};
}

}  // namespace

Scenario random_scenario(std::mt19937_64& rng, const RandomSceneOptions& opts) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

    Scenario s;
    s.ground_z = 0.0;
    s.lidar = default_lidar();
    const double road = opts.road_length;
    s.roi = {{road / 2.0, 4.0, 2.0}, {road, 10.0, 4.2}};
    s.rsu_position = {road / 2.0, 11.0, 6.0};

    const int n_cavs = opts.min_cavs + static_cast<int>(rng() % (opts.max_cavs - opts.min_cavs + 1));
    const Point3 cav_dims{4.6, 1.8, 1.6};
    for (int n = 0; n < n_cavs; ++n) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            CavSpec c;
            c.id = n;
            const double lane_y = (rng() % 2 == 0) ? 2.0 : 6.0;
            const double x = range(2.5, road - 2.5);
            c.body = {{x, lane_y, cav_dims.z / 2.0}, cav_dims};
            c.sensor_origin = {x, lane_y, cav_dims.z + 0.3};
            bool clash = false;
            for (const auto& other : s.cavs)
                if (c.body.intersects(other.body)) clash = true;
            if (!clash) {
                s.cavs.push_back(c);
                break;
            }
        }
    }

    const int n_objects =
        opts.min_objects + static_cast<int>(rng() % (opts.max_objects - opts.min_objects + 1));
    const ObjectClass classes[4] = {ObjectClass::car, ObjectClass::truck,
                                    ObjectClass::pedestrian, ObjectClass::cyclist};
    for (int m = 0; m < n_objects; ++m) {
        for (int attempt = 0; attempt < 200; ++attempt) {
            ObjectSpec obj;
            obj.id = static_cast<int>(s.objects.size());
            obj.cls = classes[rng() % 4];
            Point3 dims = class_dims(obj.cls);
            const double jitter = range(0.85, 1.15);
            dims = {dims.x * jitter, dims.y * jitter, dims.z * jitter};
            const double x = range(2.0, road - 2.0);
            const double y = range(0.8, 7.8);
            obj.box = {{x, y, dims.z / 2.0}, dims};
            bool clash = false;
            for (const auto& other : s.objects)
                if (obj.box.intersects(other.box)) clash = true;
            for (const auto& c : s.cavs)
                if (obj.box.intersects(c.body)) clash = true;
            if (!clash) {
                s.objects.push_back(obj);
                break;
            }
        }
    }
    return s;
}

}  // namespace coopsense::scene
