import json

contour_points = [[0, 0], [40, 0], [40, 30], [20, 10], [0, 30]]
area_result = get_contour_area(contour=contour_points)
print('Area:', area_result)
hull_result = get_contour_convex_hull(contour=contour_points)
convex_hull = hull_result['contour_convex_hull']
print('Convex hull:', convex_hull)
hull_area_result = get_contour_area(contour=convex_hull)
print('Convex hull area:', hull_area_result)

slide_id = 'TCGA-A2-A0CM-01Z-00-DX1'
convexity = area_result['contour_area'] / hull_area_result['contour_area']
avg_convexity = round(convexity, 3)
result = [{"slide_id": slide_id, "avg_convexity": avg_convexity}]
with_text = json.dumps(result, indent=4)
print(with_text)
f = open('answer.json', 'w')
f.write(with_text)
f.close()
print(json.loads(open('answer.json').read())[0]['avg_convexity'])
