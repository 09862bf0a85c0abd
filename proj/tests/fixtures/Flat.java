public class Flat extends Building
{
    public Flat(int windows, double charge) {
        super(windows, charge);
    }

    @Override
    public double getTax() {
        return super.getTax() - 75;
    }
}
