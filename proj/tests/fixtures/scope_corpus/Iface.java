interface Shape {
    double PI_ISH = 3.14;

    double area();

    default double twice() {
        return area() * 2 + PI_ISH;
    }
}
